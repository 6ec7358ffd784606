#include "p2m/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "p2m/error.hpp"

namespace p2m {
namespace {

using nlohmann::json;

void check_keys(const json& obj, std::string_view where,
                const std::set<std::string>& allowed, const ParseOptions& options,
                std::vector<std::string>& warnings) {
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key())) continue;
    std::string path = where.empty() ? item.key() : std::string(where) + "." + item.key();
    if (options.lenient) {
      warnings.push_back("unknown key '" + path + "' ignored");
    } else {
      throw Error(ErrorKind::validation, path + ": unknown key");
    }
  }
}

const json& require_object(const json& parent, const std::string& key,
                           std::string_view where) {
  auto it = parent.find(key);
  std::string path = where.empty() ? key : std::string(where) + "." + key;
  if (it == parent.end()) throw Error(ErrorKind::validation, path + ": required field missing");
  if (!it->is_object()) throw Error(ErrorKind::validation, path + ": expected an object");
  return *it;
}

int get_int(const json& obj, const std::string& key, std::string_view where,
            std::optional<int> fallback) {
  std::string path = std::string(where) + "." + key;
  if (where.empty()) path = key;
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorKind::validation, path + ": required field missing");
  }
  if (!it->is_number_integer())
    throw Error(ErrorKind::validation, path + ": expected an integer");
  const auto v = it->get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw Error(ErrorKind::validation, path + ": out of range");
  return static_cast<int>(v);
}

double get_number(const json& obj, const std::string& key, std::string_view where,
                  double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number())
    throw Error(ErrorKind::validation, std::string(where) + "." + key + ": expected a number");
  return it->get<double>();
}

}  // namespace

std::string read_text_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, std::string(what) + ": not found (" + path + ")");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FrontEndSpec spec_from_json(const json& doc, ParseOptions options,
                            std::vector<std::string>& warnings) {
  FrontEndSpec spec;

  const json& sensor = require_object(doc, "sensor", "");
  check_keys(sensor, "sensor", {"width", "height", "pixel_bit_depth"}, options, warnings);
  spec.geometry.width = get_int(sensor, "width", "sensor", std::nullopt);
  spec.geometry.height = get_int(sensor, "height", "sensor", std::nullopt);
  spec.geometry.pixel_bit_depth = get_int(sensor, "pixel_bit_depth", "sensor", 12);

  const json& conv = require_object(doc, "conv", "");
  check_keys(conv, "conv", {"kernel", "stride", "padding", "out_channels", "weight_levels"},
             options, warnings);
  spec.conv.kernel = get_int(conv, "kernel", "conv", std::nullopt);
  spec.conv.stride = get_int(conv, "stride", "conv", std::nullopt);
  spec.conv.padding = get_int(conv, "padding", "conv", std::nullopt);
  spec.conv.out_channels = get_int(conv, "out_channels", "conv", 16);
  spec.conv.weight_levels = get_int(conv, "weight_levels", "conv", 32);

  if (auto it = doc.find("pool"); it != doc.end()) {
    if (!it->is_object()) throw Error(ErrorKind::validation, "pool: expected an object");
    const json& pool = *it;
    check_keys(pool, "pool", {"kind", "kernel", "stride", "padding"}, options, warnings);
    auto kind_it = pool.find("kind");
    if (kind_it == pool.end()) throw Error(ErrorKind::validation, "pool.kind: required field missing");
    if (!kind_it->is_string()) throw Error(ErrorKind::validation, "pool.kind: expected a string");
    spec.pool.kind = parse_pool_kind(kind_it->get<std::string>());
    if (spec.pool.kind == PoolKind::none) {
      for (const char* k : {"kernel", "stride", "padding"})
        if (pool.contains(k))
          throw Error(ErrorKind::validation,
                      std::string("pool.") + k + ": must be absent when kind is none");
    } else {
      spec.pool.window = PoolWindow{get_int(pool, "kernel", "pool", 3),
                                    get_int(pool, "stride", "pool", std::nullopt),
                                    get_int(pool, "padding", "pool", 1)};
    }
  }

  spec.activation_bits = get_int(doc, "activation_bits", "", std::nullopt);
  if (auto it = doc.find("demosaic_mode"); it != doc.end()) {
    if (!it->is_string()) throw Error(ErrorKind::validation, "demosaic_mode: expected a string");
    spec.demosaic_mode = parse_demosaic_mode(it->get<std::string>());
  }
  return spec;
}

HardwareParams hardware_from_json(const json& j, const HardwareParams& defaults,
                                  std::string_view where, ParseOptions options,
                                  std::vector<std::string>& warnings) {
  if (!j.is_object()) throw Error(ErrorKind::validation, std::string(where) + ": expected an object");
  check_keys(j, where,
             {"e_pix", "e_adc", "e_com", "e_mac", "t_sens_per_row", "t_adc_cycle",
              "t_com_per_value", "t_back"},
             options, warnings);
  HardwareParams p;
  p.e_pix = get_number(j, "e_pix", where, defaults.e_pix);
  p.e_adc = get_number(j, "e_adc", where, defaults.e_adc);
  p.e_com = get_number(j, "e_com", where, defaults.e_com);
  p.e_mac = get_number(j, "e_mac", where, defaults.e_mac);
  p.t_sens_per_row = get_number(j, "t_sens_per_row", where, defaults.t_sens_per_row);
  p.t_adc_cycle = get_number(j, "t_adc_cycle", where, defaults.t_adc_cycle);
  p.t_com_per_value = get_number(j, "t_com_per_value", where, defaults.t_com_per_value);
  p.t_back = get_number(j, "t_back", where, defaults.t_back);
  if (auto v = validate_hardware(p, where); !v.empty())
    throw Error(ErrorKind::validation, v.front());
  return p;
}

Config parse_config(std::string_view text, ParseOptions options) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::validation, "config: top level must be an object");

  Config cfg;
  check_keys(doc, "",
             {"sensor", "conv", "pool", "activation_bits", "demosaic_mode",
              "hardware_baseline", "hardware_p2m"},
             options, cfg.warnings);
  cfg.spec = spec_from_json(doc, options, cfg.warnings);
  if (auto v = validate_spec(cfg.spec); !v.empty())
    throw Error(ErrorKind::validation, v.front());

  const HardwarePair defaults = default_hardware();
  cfg.hardware = defaults;
  if (auto it = doc.find("hardware_baseline"); it != doc.end())
    cfg.hardware.baseline =
        hardware_from_json(*it, defaults.baseline, "hardware_baseline", options, cfg.warnings);
  if (auto it = doc.find("hardware_p2m"); it != doc.end())
    cfg.hardware.p2m =
        hardware_from_json(*it, defaults.p2m, "hardware_p2m", options, cfg.warnings);
  return cfg;
}

Config load_config(const std::string& path, ParseOptions options) {
  return parse_config(read_text_file(path, "config"), options);
}

json to_json(const FrontEndSpec& spec) {
  json j;
  j["sensor"] = {{"width", spec.geometry.width},
                 {"height", spec.geometry.height},
                 {"pixel_bit_depth", spec.geometry.pixel_bit_depth}};
  j["conv"] = {{"kernel", spec.conv.kernel},
               {"stride", spec.conv.stride},
               {"padding", spec.conv.padding},
               {"out_channels", spec.conv.out_channels},
               {"weight_levels", spec.conv.weight_levels}};
  json pool = {{"kind", std::string(to_string(spec.pool.kind))}};
  if (spec.pool.window) {
    pool["kernel"] = spec.pool.window->kernel;
    pool["stride"] = spec.pool.window->stride;
    pool["padding"] = spec.pool.window->padding;
  }
  j["pool"] = pool;
  j["activation_bits"] = spec.activation_bits;
  j["demosaic_mode"] = std::string(to_string(spec.demosaic_mode));
  return j;
}

json to_json(const HardwareParams& p) {
  return {{"e_pix", p.e_pix},
          {"e_adc", p.e_adc},
          {"e_com", p.e_com},
          {"e_mac", p.e_mac},
          {"t_sens_per_row", p.t_sens_per_row},
          {"t_adc_cycle", p.t_adc_cycle},
          {"t_com_per_value", p.t_com_per_value},
          {"t_back", p.t_back}};
}

std::string serialize_config(const Config& config) {
  json j = to_json(config.spec);
  j["hardware_baseline"] = to_json(config.hardware.baseline);
  j["hardware_p2m"] = to_json(config.hardware.p2m);
  return j.dump(2) + "\n";
}

}  // namespace p2m
