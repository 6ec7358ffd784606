#include "p2m/dse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "p2m/config.hpp"
#include "p2m/error.hpp"
#include "p2m/layers.hpp"

namespace p2m::dse {
namespace {

using nlohmann::json;

const char* const kAccuracyHeader =
    "stride,pool_kind,pool_stride,channels,map_50,map_75,map_50_95,m_idf1,m_mota,name,baseline,"
    "source,approx";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, where + ": expected a number, got '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, where + ": expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0" || s.empty()) return false;
  throw Error(ErrorKind::parse, where + ": expected true|false, got '" + s + "'");
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

std::string fmt(std::optional<double> v) { return v ? fmt(*v) : ""; }

std::string spec_key(const FrontEndSpec& s) { return to_json(s).dump(); }

template <typename T>
std::vector<T> int_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_integer()) return {v.get<T>()};
  if (!v.is_array()) throw Error(ErrorKind::validation, std::string("space.") + key + ": expected a list");
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw Error(ErrorKind::validation, std::string("space.") + key + ": expected integers");
    out.push_back(e.get<T>());
  }
  return out;
}

SearchSpace space_from_json(const json& j) {
  static const std::set<std::string> known = {
      "sensor",       "weight_levels", "demosaic_mode", "kernel",       "stride",
      "padding",      "channels",      "activation_bits", "pool_kind",  "pool_kernel",
      "pool_stride",  "pool_padding",  "couple_kernel_to_stride"};
  if (!j.is_object()) throw Error(ErrorKind::validation, "space: expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorKind::validation, "space: unknown key '" + key + "'");
  SearchSpace s;
  if (j.contains("sensor")) {
    const json& g = j.at("sensor");
    s.geometry.width = g.value("width", s.geometry.width);
    s.geometry.height = g.value("height", s.geometry.height);
    s.geometry.pixel_bit_depth = g.value("pixel_bit_depth", s.geometry.pixel_bit_depth);
  }
  s.weight_levels = j.value("weight_levels", s.weight_levels);
  if (j.contains("demosaic_mode"))
    s.demosaic_mode = parse_demosaic_mode(j.at("demosaic_mode").get<std::string>());
  s.kernel = int_list<int>(j, "kernel", s.kernel);
  s.stride = int_list<int>(j, "stride", s.stride);
  s.padding = int_list<int>(j, "padding", s.padding);
  s.channels = int_list<int>(j, "channels", s.channels);
  s.activation_bits = int_list<int>(j, "activation_bits", s.activation_bits);
  if (j.contains("pool_kind")) {
    s.pool_kind.clear();
    const json& v = j.at("pool_kind");
    if (v.is_string()) s.pool_kind.push_back(parse_pool_kind(v.get<std::string>()));
    else if (v.is_array())
      for (const auto& e : v) s.pool_kind.push_back(parse_pool_kind(e.get<std::string>()));
    else throw Error(ErrorKind::validation, "space.pool_kind: expected a list of strings");
  }
  s.pool_kernel = int_list<int>(j, "pool_kernel", s.pool_kernel);
  s.pool_stride = int_list<int>(j, "pool_stride", s.pool_stride);
  s.pool_padding = int_list<int>(j, "pool_padding", s.pool_padding);
  s.couple_kernel_to_stride = j.value("couple_kernel_to_stride", s.couple_kernel_to_stride);
  return s;
}

Direction parse_direction(const std::string& s) {
  if (s == "max" || s == "maximize") return Direction::maximize;
  if (s == "min" || s == "minimize") return Direction::minimize;
  throw Error(ErrorKind::validation, "objectives: direction must be max|min, got '" + s + "'");
}

}  // namespace

// ---- accuracy ---------------------------------------------------------------

std::vector<AccuracyRecord> parse_accuracy_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name, bool required) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    if (it != header.end()) return static_cast<int>(it - header.begin());
    if (required) throw Error(ErrorKind::parse, "accuracy: header lacks column '" + name + "'");
    return -1;
  };
  const int c_stride = column("stride", true), c_kind = column("pool_kind", true),
            c_pstride = column("pool_stride", true), c_ch = column("channels", true),
            c_50 = column("map_50", true), c_75 = column("map_75", true),
            c_5095 = column("map_50_95", true), c_idf1 = column("m_idf1", true),
            c_mota = column("m_mota", true), c_name = column("name", false),
            c_base = column("baseline", false), c_src = column("source", false),
            c_approx = column("approx", false);

  std::vector<AccuracyRecord> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    const std::string where = "accuracy: row " + std::to_string(row);
    if (c.size() != header.size())
      throw Error(ErrorKind::parse, where + ": expected " + std::to_string(header.size()) + " columns");
    auto percent = [&](int col) {
      const double v = parse_double(c[col], where + " " + header[col]);
      if (!(v >= 0.0 && v <= 100.0))
        throw Error(ErrorKind::validation, where + " " + header[col] + ": must be in [0, 100]");
      return v;
    };
    AccuracyRecord r;
    r.stride = parse_int(c[c_stride], where);
    r.pool_kind = parse_pool_kind(c[c_kind]);
    r.pool_stride = c[c_pstride].empty() || c[c_pstride] == "-" ? 0 : parse_int(c[c_pstride], where);
    r.channels = parse_int(c[c_ch], where);
    r.map_50 = percent(c_50);
    r.map_75 = percent(c_75);
    r.map_50_95 = percent(c_5095);
    if (!c[c_idf1].empty()) r.m_idf1 = percent(c_idf1);
    if (!c[c_mota].empty()) r.m_mota = percent(c_mota);
    r.name = c_name >= 0 ? c[c_name] : "row" + std::to_string(row);
    r.baseline = c_base >= 0 && parse_bool(c[c_base], where);
    if (c_src >= 0) r.source = c[c_src];
    r.approx = c_approx >= 0 && parse_bool(c[c_approx], where);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AccuracyRecord> load_accuracy_csv(const std::string& path) {
  return parse_accuracy_csv(read_text_file(path, "accuracy table"));
}

std::string format_accuracy_csv(const std::vector<AccuracyRecord>& table) {
  std::ostringstream ss;
  ss << kAccuracyHeader << '\n';
  for (const auto& r : table) {
    ss << r.stride << ',' << to_string(r.pool_kind) << ',';
    if (r.pool_kind != PoolKind::none) ss << r.pool_stride;
    ss << ',' << r.channels << ',' << fmt(r.map_50) << ',' << fmt(r.map_75) << ','
       << fmt(r.map_50_95) << ',' << fmt(r.m_idf1) << ',' << fmt(r.m_mota) << ',' << r.name << ','
       << (r.baseline ? "true" : "false") << ',' << r.source << ','
       << (r.approx ? "true" : "false") << '\n';
  }
  return ss.str();
}

std::vector<AccuracyRecord> bundled_accuracy() {
  auto rec = [](std::string name, bool baseline, int s, PoolKind kind, int ps, int ch, double m50,
                double m75, double m5095, std::optional<double> mota,
                std::optional<double> idf1) {
    AccuracyRecord r;
    r.name = std::move(name);
    r.baseline = baseline;
    r.stride = s;
    r.pool_kind = kind;
    r.pool_stride = ps;
    r.channels = ch;
    r.map_50 = m50;
    r.map_75 = m75;
    r.map_50_95 = m5095;
    r.m_mota = mota;
    r.m_idf1 = idf1;
    r.source = idf1 ? "published:detection+tracking" : "published:detection";
    return r;
  };
  return {
      rec("baseline", true, 2, PoolKind::max, 2, 64, 57.5, 33.2, 33.7, 36.6, 50.8),
      rec("p2m_s2_max2", false, 2, PoolKind::max, 2, 16, 56.5, 32.9, 33.2, 34.0, 49.7),
      rec("p2m_s6_none", false, 6, PoolKind::none, 0, 16, 55.5, 31.7, 32.3, 34.2, 49.1),
      rec("p2m_s4_avg2", false, 4, PoolKind::avg, 2, 16, 53.5, 30.3, 31.1, std::nullopt,
          std::nullopt),
  };
}

const AccuracyRecord* find_accuracy(const std::vector<AccuracyRecord>& table,
                                    const FrontEndSpec& spec) {
  for (const auto& r : table) {
    if (r.baseline) continue;
    if (r.stride == spec.conv.stride && r.pool_kind == spec.pool.kind &&
        r.pool_stride == spec.pool.stride_or_zero() && r.channels == spec.conv.out_channels)
      return &r;
  }
  return nullptr;
}

const AccuracyRecord* find_named(const std::vector<AccuracyRecord>& table, std::string_view name) {
  for (const auto& r : table)
    if (r.name == name) return &r;
  return nullptr;
}

// ---- enumeration --------------------------------------------------------------

std::vector<FrontEndSpec> enumerate(const SearchSpace& space) {
  return enumerate(std::vector<SearchSpace>{space});
}

std::vector<FrontEndSpec> enumerate(const std::vector<SearchSpace>& spaces) {
  std::vector<FrontEndSpec> out;
  std::set<std::string> seen;
  auto push = [&](const FrontEndSpec& spec) {
    if (!validate_spec(spec).empty()) return;
    if (seen.insert(spec_key(spec)).second) out.push_back(spec);
  };
  for (const auto& sp : spaces) {
    for (int k : sp.kernel)
      for (int s : sp.stride)
        for (int d : sp.padding)
          for (int co : sp.channels)
            for (int nb : sp.activation_bits)
              for (PoolKind kind : sp.pool_kind) {
                FrontEndSpec spec;
                spec.geometry = sp.geometry;
                spec.demosaic_mode = sp.demosaic_mode;
                spec.conv = {sp.couple_kernel_to_stride && s > k ? s : k, s, d, co,
                             sp.weight_levels};
                spec.activation_bits = nb;
                if (kind == PoolKind::none) {
                  push(spec);
                  continue;
                }
                for (int pk : sp.pool_kernel)
                  for (int ps : sp.pool_stride)
                    for (int pd : sp.pool_padding) {
                      spec.pool = {kind, PoolWindow{pk, ps, pd}};
                      push(spec);
                    }
              }
  }
  return out;
}

std::vector<std::string> validate_constraints(const Constraints& c) {
  std::vector<std::string> v;
  if (c.max_transistors && *c.max_transistors < 0) v.push_back("constraints.max_transistors must be >= 0");
  if (c.min_fps && !(*c.min_fps >= 0.0)) v.push_back("constraints.min_fps must be >= 0");
  if (c.min_br && !(*c.min_br >= 0.0)) v.push_back("constraints.min_br must be >= 0");
  if (c.max_accuracy_drop && !(*c.max_accuracy_drop >= 0.0))
    v.push_back("constraints.max_accuracy_drop must be >= 0");
  return v;
}

std::vector<Objective> default_objectives() {
  return {{"br", Direction::maximize},
          {"fps", Direction::maximize},
          {"e_tot", Direction::minimize},
          {"map_50_95", Direction::maximize},
          {"n_t", Direction::minimize}};
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "br",      "fps",    "e_tot",  "e_sens", "t_total", "n_t",    "conversions",
      "cycles",  "map_50", "map_75", "map_50_95", "m_mota", "m_idf1"};
  return names;
}

std::optional<double> metric_value(const DesignPoint& p, std::string_view metric) {
  const auto& names = metric_names();
  if (std::find(names.begin(), names.end(), metric) == names.end())
    throw Error(ErrorKind::validation, "objectives: unknown metric '" + std::string(metric) + "'");
  if (metric.starts_with("map") || metric.starts_with("m_")) {
    if (!p.accuracy) return std::nullopt;
    if (metric == "map_50") return p.accuracy->map_50;
    if (metric == "map_75") return p.accuracy->map_75;
    if (metric == "map_50_95") return p.accuracy->map_50_95;
    if (metric == "m_mota") return p.accuracy->m_mota;
    return p.accuracy->m_idf1;
  }
  if (!p.cost) return std::nullopt;
  const auto& c = p.cost->p2m;
  if (metric == "br") return c.br;
  if (metric == "fps") return std::isfinite(c.fps) ? std::optional<double>(c.fps) : std::nullopt;
  if (metric == "e_tot") return c.energy.e_tot;
  if (metric == "e_sens") return c.energy.e_sens;
  if (metric == "t_total") return c.delay.t_total;
  if (metric == "n_t") return static_cast<double>(c.n_t);
  if (metric == "conversions") return static_cast<double>(c.conversions);
  return static_cast<double>(c.cycles);
}

std::vector<DesignPoint> evaluate_all(const std::vector<FrontEndSpec>& specs,
                                      const HardwarePair& hw, const cost::Accounting& accounting,
                                      const std::vector<AccuracyRecord>& accuracy) {
  std::vector<DesignPoint> points;
  points.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    DesignPoint p;
    p.id = static_cast<int>(i);
    p.spec = specs[i];
    try {
      p.cost = cost::evaluate_cost(p.spec, hw, cost::default_backend(p.spec), accounting);
    } catch (const Error& e) {
      p.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    if (const AccuracyRecord* r = find_accuracy(accuracy, p.spec)) p.accuracy = *r;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<int> filter_constraints(std::vector<DesignPoint>& points, const Constraints& c,
                                    const std::vector<AccuracyRecord>& accuracy) {
  if (auto v = validate_constraints(c); !v.empty()) throw Error(ErrorKind::validation, v.front());
  const AccuracyRecord* reference = nullptr;
  if (c.max_accuracy_drop) {
    reference = find_named(accuracy, c.accuracy_reference);
    if (!reference)
      throw Error(ErrorKind::not_found,
                  "constraints: accuracy reference '" + c.accuracy_reference + "' not found");
  }
  std::vector<int> kept;
  for (auto& p : points) {
    if (p.error) continue;
    const auto& cv = p.cost->p2m;
    if (c.max_transistors && cv.n_t > *c.max_transistors) p.rejected_by = "max_transistors";
    else if (c.min_fps && cv.fps < *c.min_fps) p.rejected_by = "min_fps";
    else if (c.min_br && cv.br < *c.min_br) p.rejected_by = "min_br";
    else if (reference) {
      if (!p.accuracy) p.rejected_by = "max_accuracy_drop (accuracy unknown)";
      else if (reference->map_50_95 - p.accuracy->map_50_95 > *c.max_accuracy_drop)
        p.rejected_by = "max_accuracy_drop";
    }
    if (!p.rejected_by) kept.push_back(p.id);
  }
  return kept;
}

bool dominates(const DesignPoint& a, const DesignPoint& b, const std::vector<Objective>& objectives) {
  bool strict = false;
  for (const auto& o : objectives) {
    const double va = *metric_value(a, o.metric);
    const double vb = *metric_value(b, o.metric);
    const bool better = o.direction == Direction::maximize ? va > vb : va < vb;
    const bool worse = o.direction == Direction::maximize ? va < vb : va > vb;
    if (worse) return false;
    strict = strict || better;
  }
  return strict;
}

FrontResult pareto_front(std::vector<DesignPoint>& points, const std::vector<int>& candidates,
                         const std::vector<Objective>& objectives) {
  for (const auto& o : objectives) (void)metric_value(DesignPoint{}, o.metric);
  auto by_id = [&](int id) -> DesignPoint& {
    auto it = std::find_if(points.begin(), points.end(), [&](const auto& p) { return p.id == id; });
    if (it == points.end()) throw Error(ErrorKind::not_found, "pareto: no point with id " + std::to_string(id));
    return *it;
  };
  FrontResult result;
  std::vector<DesignPoint*> eligible;
  for (int id : candidates) {
    DesignPoint& p = by_id(id);
    p.pareto = false;
    p.dominated_by.reset();
    const bool complete = std::all_of(objectives.begin(), objectives.end(), [&](const auto& o) {
      return metric_value(p, o.metric).has_value();
    });
    p.excluded = !complete;
    if (complete) eligible.push_back(&p);
    else result.excluded.push_back(id);
  }
  for (DesignPoint* p : eligible) {
    for (const DesignPoint* q : eligible) {
      if (q != p && dominates(*q, *p, objectives)) {
        p->dominated_by = q->id;
        break;
      }
    }
    if (!p->dominated_by) {
      p->pareto = true;
      result.front.push_back(p->id);
    }
  }
  return result;
}

SweepConfig parse_sweep(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("sweep: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::validation, "sweep: top level must be an object");
  for (const auto& [key, value] : j.items())
    if (key != "space" && key != "constraints" && key != "objectives")
      throw Error(ErrorKind::validation, "sweep: unknown key '" + key + "'");
  SweepConfig cfg;
  try {
    if (j.contains("space")) {
      const json& s = j.at("space");
      if (s.is_array())
        for (const auto& sub : s) cfg.spaces.push_back(space_from_json(sub));
      else cfg.spaces.push_back(space_from_json(s));
    }
    if (j.contains("constraints")) {
      const json& c = j.at("constraints");
      for (const auto& [key, value] : c.items())
        if (key != "max_transistors" && key != "min_fps" && key != "min_br" &&
            key != "max_accuracy_drop" && key != "accuracy_reference")
          throw Error(ErrorKind::validation, "constraints: unknown key '" + key + "'");
      if (c.contains("max_transistors")) cfg.constraints.max_transistors = c.at("max_transistors").get<std::int64_t>();
      if (c.contains("min_fps")) cfg.constraints.min_fps = c.at("min_fps").get<double>();
      if (c.contains("min_br")) cfg.constraints.min_br = c.at("min_br").get<double>();
      if (c.contains("max_accuracy_drop"))
        cfg.constraints.max_accuracy_drop = c.at("max_accuracy_drop").get<double>();
      cfg.constraints.accuracy_reference = c.value("accuracy_reference", std::string("baseline"));
    }
    if (j.contains("objectives")) {
      cfg.objectives.clear();
      for (const auto& o : j.at("objectives")) {
        Objective obj{o.at("metric").get<std::string>(),
                      parse_direction(o.value("direction", std::string("max")))};
        (void)metric_value(DesignPoint{}, obj.metric);
        cfg.objectives.push_back(obj);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, std::string("sweep: ") + e.what());
  }
  if (auto v = validate_constraints(cfg.constraints); !v.empty())
    throw Error(ErrorKind::validation, v.front());
  return cfg;
}

SweepConfig load_sweep(const std::string& path) { return parse_sweep(read_text_file(path, "sweep")); }

SweepResult run_sweep(const SweepConfig& config, const HardwarePair& hw,
                      const cost::Accounting& accounting,
                      const std::vector<AccuracyRecord>& accuracy) {
  SweepResult r;
  r.points = evaluate_all(enumerate(config.spaces), hw, accounting, accuracy);
  const auto kept = filter_constraints(r.points, config.constraints, accuracy);
  r.front = pareto_front(r.points, kept, config.objectives);
  return r;
}

std::string points_csv(const SweepResult& result, bool front_only) {
  std::ostringstream ss;
  ss << "id,kernel,stride,padding,channels,activation_bits,pool_kind,pool_kernel,pool_stride,"
        "pool_padding,n_t,br,conversions,cycles,e_tot_pJ,t_total_ms,fps,map_50,map_75,"
        "map_50_95,accuracy,status,rejected_by,excluded,pareto,dominated_by\n";
  for (const auto& p : result.points) {
    if (front_only && !p.pareto) continue;
    const auto& s = p.spec;
    ss << p.id << ',' << s.conv.kernel << ',' << s.conv.stride << ',' << s.conv.padding << ','
       << s.conv.out_channels << ',' << s.activation_bits << ',' << to_string(s.pool.kind) << ',';
    if (s.pool.window) ss << s.pool.window->kernel << ',' << s.pool.window->stride << ','
                          << s.pool.window->padding << ',';
    else ss << ",,,";
    if (p.cost) {
      const auto& c = p.cost->p2m;
      ss << c.n_t << ',' << fmt(c.br) << ',' << c.conversions << ',' << c.cycles << ','
         << fmt(c.energy.e_tot) << ',' << fmt(c.delay.t_total) << ','
         << (std::isfinite(c.fps) ? fmt(c.fps) : std::string("inf")) << ',';
    } else {
      ss << ",,,,,,,";
    }
    if (p.accuracy)
      ss << fmt(p.accuracy->map_50) << ',' << fmt(p.accuracy->map_75) << ','
         << fmt(p.accuracy->map_50_95) << ",known,";
    else ss << ",,,unknown,";
    ss << (p.error ? "error" : "ok") << ',' << p.rejected_by.value_or("") << ','
       << (p.excluded ? "true" : "false") << ',' << (p.pareto ? "true" : "false") << ',';
    if (p.dominated_by) ss << *p.dominated_by;
    ss << '\n';
  }
  return ss.str();
}

json to_json(const SweepResult& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    json j = {{"id", p.id}, {"spec", to_json(p.spec)}};
    j["cost"] = p.cost ? cost::to_json(p.cost->p2m) : json();
    j["error"] = p.error ? json(*p.error) : json();
    j["accuracy"] = p.accuracy ? json(p.accuracy->name) : json("unknown");
    j["rejected_by"] = p.rejected_by ? json(*p.rejected_by) : json();
    j["excluded"] = p.excluded;
    j["pareto"] = p.pareto;
    j["dominated_by"] = p.dominated_by ? json(*p.dominated_by) : json();
    points.push_back(std::move(j));
  }
  return {{"points", points}, {"front", r.front.front}, {"excluded", r.front.excluded}};
}

}  // namespace p2m::dse
