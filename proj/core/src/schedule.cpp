#include "p2m/schedule.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "p2m/error.hpp"

namespace p2m::schedule {
namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::string pos(const Activation& a) {
  return "(" + std::to_string(a.kernel_row) + "," + std::to_string(a.kernel_col) + ")";
}

}  // namespace

Activation make_activation(const FrontEndSpec& spec, std::int64_t row, std::int64_t col, int adc) {
  return {row, col, row * spec.conv.stride - spec.conv.padding,
          col * spec.conv.stride - spec.conv.padding, adc};
}

std::int64_t column_group(const FrontEndSpec& spec, const Activation& a) {
  return (a.left + spec.conv.padding) / spec.conv.kernel;
}

std::int64_t ScheduleTrace::max_parallel() const {
  std::size_t best = 0;
  for (const auto& c : cycles) best = std::max(best, c.size());
  return static_cast<std::int64_t>(best);
}

std::int64_t ScheduleTrace::activation_count() const {
  std::int64_t n = 0;
  for (const auto& c : cycles) n += static_cast<std::int64_t>(c.size());
  return n;
}

std::int64_t closed_form_cycles(const FrontEndSpec& spec) {
  const std::int64_t h = spec.conv_output().height;
  if (h < 1) return 0;
  return ceil_div(h, spec.conv.kernel) * ceil_div(spec.conv.kernel, spec.conv.stride);
}

SchedulePlan plan_schedule(const FrontEndSpec& spec) {
  if (auto v = validate_spec(spec); !v.empty()) throw Error(ErrorKind::validation, v.front());
  const Extent2D grid = spec.conv_input();
  const int k = spec.conv.kernel;
  if (k > grid.height || k > grid.width)
    throw Error(ErrorKind::infeasible, "schedule: kernel " + std::to_string(k) +
                                           " exceeds pixel array " + std::to_string(grid.height) +
                                           "x" + std::to_string(grid.width));
  const Extent2D out = spec.conv_output();
  const std::int64_t phase_span = ceil_div(k, spec.conv.stride);
  SchedulePlan plan;
  plan.phases = std::min(phase_span, out.width);
  plan.waves = std::max(ceil_div(out.height, k), std::min(phase_span, out.height));
  return plan;
}

ScheduleTrace build_schedule(const FrontEndSpec& spec, int channel) {
  if (channel < 0 || channel >= spec.conv.out_channels)
    throw Error(ErrorKind::validation, "schedule: channel " + std::to_string(channel) +
                                           " outside [0, " +
                                           std::to_string(spec.conv.out_channels) + ")");
  const SchedulePlan plan = plan_schedule(spec);
  const Extent2D out = spec.conv_output();
  ScheduleTrace trace{spec, channel, {}};
  trace.cycles.reserve(static_cast<std::size_t>(plan.cycles()));
  for (std::int64_t phase = 0; phase < plan.phases; ++phase) {
    for (std::int64_t wave = 0; wave < plan.waves; ++wave) {
      std::vector<Activation> cycle;
      for (std::int64_t r = wave; r < out.height; r += plan.waves) {
        const int adc = static_cast<int>(r / plan.waves);
        for (std::int64_t c = phase; c < out.width; c += plan.phases)
          cycle.push_back(make_activation(spec, r, c, adc));
      }
      trace.cycles.push_back(std::move(cycle));
    }
  }
  return trace;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::disjointness: return "disjointness";
    case Violation::Kind::adc_conflict: return "adc_conflict";
    case Violation::Kind::coverage: return "coverage";
    case Violation::Kind::geometry: return "geometry";
  }
  return "unknown";
}

std::vector<Violation> validate_schedule(const ScheduleTrace& trace) {
  std::vector<Violation> out;
  const FrontEndSpec& spec = trace.spec;
  const Extent2D grid = spec.conv_input();
  const Extent2D outer = spec.conv_output();
  const int k = spec.conv.kernel;

  std::vector<std::int32_t> coverage(static_cast<std::size_t>(std::max<std::int64_t>(0, outer.area())), 0);
  // Per-cell owner for the cycle currently being checked; stamp avoids clears.
  std::vector<std::size_t> stamp(static_cast<std::size_t>(grid.area()), 0);
  std::vector<std::size_t> owner(static_cast<std::size_t>(grid.area()), 0);

  for (std::size_t ci = 0; ci < trace.cycles.size(); ++ci) {
    const auto& cycle = trace.cycles[ci];
    const std::size_t cycle_stamp = ci + 1;
    std::set<std::pair<std::size_t, std::size_t>> overlapping;
    std::map<std::pair<std::int64_t, int>, std::size_t> adc_owner;

    for (std::size_t ai = 0; ai < cycle.size(); ++ai) {
      const Activation& a = cycle[ai];
      const bool in_range = a.kernel_row >= 0 && a.kernel_row < outer.height &&
                            a.kernel_col >= 0 && a.kernel_col < outer.width;
      if (!in_range) {
        out.push_back({Violation::Kind::coverage, ci,
                       "cycle " + std::to_string(ci) + ": activation " + pos(a) +
                           " is outside the output map"});
        continue;
      }
      const Activation expected = make_activation(spec, a.kernel_row, a.kernel_col, a.adc);
      if (expected.top != a.top || expected.left != a.left || a.adc < 0 || a.adc >= k) {
        out.push_back({Violation::Kind::geometry, ci,
                       "cycle " + std::to_string(ci) + ": activation " + pos(a) +
                           " has inconsistent top-left or adc index " + std::to_string(a.adc)});
        continue;
      }
      ++coverage[static_cast<std::size_t>(a.kernel_row * outer.width + a.kernel_col)];

      auto [it, fresh] = adc_owner.try_emplace({column_group(spec, a), a.adc}, ai);
      if (!fresh) {
        out.push_back({Violation::Kind::adc_conflict, ci,
                       "cycle " + std::to_string(ci) + ": activations " + pos(cycle[it->second]) +
                           " and " + pos(a) + " share adc " + std::to_string(a.adc) +
                           " in column group " + std::to_string(column_group(spec, a))});
      }

      const std::int64_t y0 = std::max<std::int64_t>(a.top, 0);
      const std::int64_t y1 = std::min<std::int64_t>(a.top + k, grid.height);
      const std::int64_t x0 = std::max<std::int64_t>(a.left, 0);
      const std::int64_t x1 = std::min<std::int64_t>(a.left + k, grid.width);
      for (std::int64_t y = y0; y < y1; ++y) {
        for (std::int64_t x = x0; x < x1; ++x) {
          const auto cell = static_cast<std::size_t>(y * grid.width + x);
          if (stamp[cell] == cycle_stamp) {
            overlapping.emplace(owner[cell], ai);
          } else {
            stamp[cell] = cycle_stamp;
            owner[cell] = ai;
          }
        }
      }
    }
    for (const auto& [first, second] : overlapping)
      out.push_back({Violation::Kind::disjointness, ci,
                     "cycle " + std::to_string(ci) + ": windows of " + pos(cycle[first]) +
                         " and " + pos(cycle[second]) + " overlap"});
  }

  for (std::int64_t r = 0; r < outer.height; ++r)
    for (std::int64_t c = 0; c < outer.width; ++c) {
      const auto n = coverage[static_cast<std::size_t>(r * outer.width + c)];
      if (n != 1)
        out.push_back({Violation::Kind::coverage, std::nullopt,
                       "output (" + std::to_string(r) + "," + std::to_string(c) + ") scheduled " +
                           std::to_string(n) + " times"});
    }
  return out;
}

ConversionBudget total_conversions(const FrontEndSpec& spec) {
  ConversionBudget b;
  b.cycles_per_channel = plan_schedule(spec).cycles();
  b.total_cycles = b.cycles_per_channel * spec.conv.out_channels;
  b.conversions = spec.conv_output().area() * spec.conv.out_channels;
  return b;
}

ScheduleSummary summarize(const ScheduleTrace& trace) {
  ScheduleSummary s;
  s.channel = trace.channel;
  s.cycles = static_cast<std::int64_t>(trace.cycles.size());
  s.closed_form_cycles = closed_form_cycles(trace.spec);
  s.conversions = total_conversions(trace.spec).conversions;
  s.max_parallel = trace.max_parallel();
  return s;
}

nlohmann::json to_json(const ScheduleSummary& s) {
  return {{"channel", s.channel},       {"cycles", s.cycles},
          {"closed_form_cycles", s.closed_form_cycles}, {"conversions", s.conversions},
          {"max_parallel", s.max_parallel}, {"delta", s.delta()}};
}

std::string to_jsonl(const ScheduleTrace& trace, std::int64_t max_cycles) {
  std::string out;
  const auto n = static_cast<std::int64_t>(trace.cycles.size());
  const std::int64_t limit = max_cycles < 0 ? n : std::min(n, max_cycles);
  for (std::int64_t i = 0; i < limit; ++i) {
    out += "{\"cycle\":" + std::to_string(i) + ",\"activations\":[";
    bool first = true;
    for (const auto& a : trace.cycles[static_cast<std::size_t>(i)]) {
      if (!first) out += ',';
      first = false;
      out += "{\"r\":" + std::to_string(a.kernel_row) + ",\"c\":" + std::to_string(a.kernel_col) +
             ",\"adc\":" + std::to_string(a.adc) + "}";
    }
    out += "]}\n";
  }
  return out;
}

ScheduleTrace from_jsonl(const std::string& text, const FrontEndSpec& spec, int channel) {
  ScheduleTrace trace{spec, channel, {}};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto index = j.at("cycle").get<std::size_t>();
      if (index != trace.cycles.size())
        throw Error(ErrorKind::parse, "trace line " + std::to_string(line_no) +
                                          ": cycles must be consecutive from 0");
      std::vector<Activation> cycle;
      for (const auto& a : j.at("activations"))
        cycle.push_back(make_activation(spec, a.at("r").get<std::int64_t>(),
                                        a.at("c").get<std::int64_t>(), a.at("adc").get<int>()));
      trace.cycles.push_back(std::move(cycle));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace p2m::schedule
