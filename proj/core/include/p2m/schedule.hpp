#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "p2m/model.hpp"

namespace p2m::schedule {

/// One kernel evaluation converted by one column ADC.
struct Activation {
  std::int64_t kernel_row = 0;
  std::int64_t kernel_col = 0;
  /// Top-left pixel of the K x K window on the padded-origin grid; negative
  /// coordinates fall in the zero padding.
  std::int64_t top = 0;
  std::int64_t left = 0;
  int adc = 0;

  friend bool operator==(const Activation&, const Activation&) = default;
};

Activation make_activation(const FrontEndSpec& spec, std::int64_t row, std::int64_t col, int adc);

/// Columns [g*K, (g+1)*K) of the padded grid share K ADCs; an activation
/// belongs to the group holding its leftmost (padded) column.
std::int64_t column_group(const FrontEndSpec& spec, const Activation& a);

struct ScheduleTrace {
  FrontEndSpec spec;
  int channel = 0;
  std::vector<std::vector<Activation>> cycles;

  std::int64_t max_parallel() const;
  std::int64_t activation_count() const;
};

/// Analytic shape of the schedule build_schedule() emits.
struct SchedulePlan {
  std::int64_t phases = 0;       ///< horizontal stride phases, min(ceil(K/S), W_out)
  std::int64_t waves = 0;        ///< vertical waves per phase
  std::int64_t cycles() const { return phases * waves; }
};

/// Cycles per channel as stated by the closed form ceil(H/K) * ceil(K/S), H
/// being the conv output height.
std::int64_t closed_form_cycles(const FrontEndSpec& spec);

/// Throws Error{infeasible} if the kernel does not fit inside the pixel array.
SchedulePlan plan_schedule(const FrontEndSpec& spec);

/// Columns are swept in ceil(K/S) phases (output columns congruent mod the
/// phase count never overlap); rows are dealt round-robin into waves whose
/// members are at least ceil(K/S) output rows apart and at most K per column.
/// Kernels in a cycle are emitted in ascending (row, col); the ADC index is the
/// kernel's rank within its column stack.
ScheduleTrace build_schedule(const FrontEndSpec& spec, int channel);

struct Violation {
  enum class Kind { disjointness, adc_conflict, coverage, geometry };
  Kind kind;
  std::optional<std::size_t> cycle;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

/// Checks footprint disjointness and ADC exclusivity within each cycle and
/// exactly-once coverage across the trace.
std::vector<Violation> validate_schedule(const ScheduleTrace& trace);

struct ConversionBudget {
  std::int64_t cycles_per_channel = 0;
  std::int64_t total_cycles = 0;
  std::int64_t conversions = 0;   ///< C_o * H_out * W_out, before pooling
};

ConversionBudget total_conversions(const FrontEndSpec& spec);

struct ScheduleSummary {
  int channel = 0;
  std::int64_t cycles = 0;
  std::int64_t closed_form_cycles = 0;
  std::int64_t conversions = 0;
  std::int64_t max_parallel = 0;
  std::int64_t delta() const { return cycles - closed_form_cycles; }
};

ScheduleSummary summarize(const ScheduleTrace& trace);
nlohmann::json to_json(const ScheduleSummary& summary);

/// JSON-lines, one cycle per line: {"cycle":i,"activations":[{"r","c","adc"}]}.
/// max_cycles < 0 emits every cycle.
std::string to_jsonl(const ScheduleTrace& trace, std::int64_t max_cycles = -1);
ScheduleTrace from_jsonl(const std::string& text, const FrontEndSpec& spec, int channel);

}  // namespace p2m::schedule
