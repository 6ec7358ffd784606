#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/cost.hpp"
#include "p2m/model.hpp"

namespace p2m::dse {

// ---- accuracy lookup ------------------------------------------------------

/// Columns located by header name: stride,pool_kind,pool_stride,channels,
/// map_50,map_75,map_50_95,m_idf1,m_mota are required; name,baseline,source,
/// approx are optional. Empty tracking cells mean unknown.
std::vector<AccuracyRecord> parse_accuracy_csv(std::string_view text);
std::vector<AccuracyRecord> load_accuracy_csv(const std::string& path);
std::string format_accuracy_csv(const std::vector<AccuracyRecord>& table);

/// Published detection and tracking results, transcribed.
std::vector<AccuracyRecord> bundled_accuracy();

/// Exact join on (S, pool kind, S', C_o), skipping baseline records.
const AccuracyRecord* find_accuracy(const std::vector<AccuracyRecord>& table,
                                    const FrontEndSpec& spec);
const AccuracyRecord* find_named(const std::vector<AccuracyRecord>& table,
                                 std::string_view name);

// ---- search space -----------------------------------------------------------

struct SearchSpace {
  SensorGeometry geometry;
  int weight_levels = 32;
  DemosaicMode demosaic_mode = DemosaicMode::average_green;
  std::vector<int> kernel{7};
  std::vector<int> stride{2};
  std::vector<int> padding{3};
  std::vector<int> channels{16};
  std::vector<int> activation_bits{8};
  std::vector<PoolKind> pool_kind{PoolKind::none};
  std::vector<int> pool_kernel{3};
  std::vector<int> pool_stride{2};
  std::vector<int> pool_padding{1};
  /// Raise K to S whenever S > K.
  bool couple_kernel_to_stride = true;
};

/// Cartesian product over the ranges (K, S, D, C_o, N_b, pool kind, K', S',
/// D' order), coupled, filtered by validate_spec, duplicates dropped.
std::vector<FrontEndSpec> enumerate(const SearchSpace& space);
std::vector<FrontEndSpec> enumerate(const std::vector<SearchSpace>& spaces);

struct Constraints {
  std::optional<std::int64_t> max_transistors;
  std::optional<double> min_fps;
  std::optional<double> min_br;
  /// mAP(0.5:0.95) percentage points below the named reference record.
  std::optional<double> max_accuracy_drop;
  std::string accuracy_reference = "baseline";
};

std::vector<std::string> validate_constraints(const Constraints& c);

enum class Direction { maximize, minimize };

struct Objective {
  std::string metric;
  Direction direction = Direction::maximize;
};

/// br, fps, e_tot, map_50_95 maximized/minimized per the usual trade-off.
std::vector<Objective> default_objectives();
/// Metric names accepted by objectives.
const std::vector<std::string>& metric_names();

struct DesignPoint {
  int id = 0;
  FrontEndSpec spec;
  std::optional<cost::CostReport> cost;
  std::optional<std::string> error;
  std::optional<AccuracyRecord> accuracy;
  std::optional<std::string> rejected_by;
  bool excluded = false;  ///< missing an objective metric
  bool pareto = false;
  std::optional<int> dominated_by;
};

/// Metric value, or nullopt when the point does not define it. Throws
/// Error{validation} on an unknown metric name.
std::optional<double> metric_value(const DesignPoint& p, std::string_view metric);

std::vector<DesignPoint> evaluate_all(const std::vector<FrontEndSpec>& specs,
                                      const HardwarePair& hw, const cost::Accounting& accounting,
                                      const std::vector<AccuracyRecord>& accuracy);

/// Sets rejected_by on each violating point; returns ids of the survivors.
std::vector<int> filter_constraints(std::vector<DesignPoint>& points, const Constraints& c,
                                    const std::vector<AccuracyRecord>& accuracy);

/// a dominates b: no worse on every objective, strictly better on one.
bool dominates(const DesignPoint& a, const DesignPoint& b, const std::vector<Objective>& objectives);

struct FrontResult {
  std::vector<int> front;
  std::vector<int> excluded;
};

/// Non-dominated subset of `candidates` (point ids). Marks pareto,
/// dominated_by and excluded on the points.
FrontResult pareto_front(std::vector<DesignPoint>& points, const std::vector<int>& candidates,
                         const std::vector<Objective>& objectives);

struct SweepConfig {
  std::vector<SearchSpace> spaces;
  Constraints constraints;
  std::vector<Objective> objectives = default_objectives();
};

SweepConfig parse_sweep(std::string_view text);
SweepConfig load_sweep(const std::string& path);

struct SweepResult {
  std::vector<DesignPoint> points;
  FrontResult front;
};

/// enumerate -> evaluate -> filter -> pareto.
SweepResult run_sweep(const SweepConfig& config, const HardwarePair& hw,
                      const cost::Accounting& accounting,
                      const std::vector<AccuracyRecord>& accuracy);

std::string points_csv(const SweepResult& result, bool front_only = false);
nlohmann::json to_json(const SweepResult& result);

}  // namespace p2m::dse
