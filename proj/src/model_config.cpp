#include "spinsim/model_config.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "spinsim/errors.hpp"
#include "spinsim/models.hpp"

namespace spinsim {

namespace {

using nlohmann::json;

void reject_unknown(const json& spec, const std::set<std::string>& allowed,
                    const std::string& where) {
  std::string unknown;
  for (const auto& [key, value] : spec.items()) {
    if (allowed.count(key) == 0 && !is_run_config_key(key)) {
      unknown += (unknown.empty() ? "" : ", ") + key;
    }
  }
  if (!unknown.empty()) throw ConfigError(where + ": unknown field(s): " + unknown);
}

template <typename T>
T required(const json& spec, const std::string& key, const std::string& where) {
  if (!spec.contains(key)) throw ConfigError(where + ": missing required field \"" + key + "\"");
  try {
    return spec.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T optional(const json& spec, const std::string& key, T fallback, const std::string& where) {
  if (!spec.contains(key)) return fallback;
  try {
    return spec.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type");
  }
}

std::size_t positive_size(const json& spec, const std::string& key, const std::string& where) {
  const auto v = required<long long>(spec, key, where);
  if (v <= 0) throw ConfigError(where + ": field \"" + key + "\" must be a positive integer");
  return static_cast<std::size_t>(v);
}

SumMethod parse_sum(const json& spec, const std::string& where) {
  const auto name = optional<std::string>(spec, "sum", "fft", where);
  if (name == "fft") return SumMethod::fft;
  if (name == "direct") return SumMethod::direct;
  throw ConfigError(where + ": field \"sum\" must be \"fft\" or \"direct\"");
}

LinkFunction parse_link(const std::string& kind_name, const json& params,
                        const std::string& where) {
  LinkFunction link;
  link.kind = LinkFunction::parse_kind(kind_name);
  if (!params.is_null() && !params.is_object()) {
    throw ConfigError(where + ": link parameters must be an object");
  }
  const json p = params.is_null() ? json::object() : params;
  reject_unknown(p, {"value", "scale", "offset", "floor", "sign"}, where);
  link.value = optional<double>(p, "value", link.value, where);
  link.scale = optional<double>(p, "scale", link.scale, where);
  link.offset = optional<double>(p, "offset", link.offset, where);
  link.floor = optional<double>(p, "floor", link.floor, where);
  link.sign = optional<double>(p, "sign", link.sign, where);
  link.validate();
  return link;
}

std::unique_ptr<RateModel> load_gauss(const json& spec) {
  const std::string where = "gauss-conv-1d";
  reject_unknown(spec, {"type", "n", "sigma", "death_rate", "periodic", "sum"}, where);
  return std::make_unique<GaussConv1DModel>(
      positive_size(spec, "n", where), required<double>(spec, "sigma", where),
      optional<double>(spec, "death_rate", 1.0, where),
      optional<bool>(spec, "periodic", false, where), parse_sum(spec, where));
}

std::unique_ptr<RateModel> load_ising(const json& spec) {
  const std::string where = "ising-kac-2d";
  reject_unknown(spec, {"type", "side", "beta", "a", "a_scale", "periodic", "sum"}, where);
  const std::size_t side = positive_size(spec, "side", where);
  const double n = static_cast<double>(side * side);
  double a = 0.0;
  if (spec.contains("a") && spec.contains("a_scale")) {
    throw ConfigError(where + ": give either \"a\" or \"a_scale\", not both");
  }
  if (spec.contains("a_scale")) {
    a = required<double>(spec, "a_scale", where) / n;
  } else {
    a = required<double>(spec, "a", where);
  }
  return std::make_unique<IsingKac2DModel>(side, required<double>(spec, "beta", where), a,
                                           optional<bool>(spec, "periodic", false, where),
                                           parse_sum(spec, where));
}

std::unique_ptr<RateModel> load_dense(const json& spec, const std::filesystem::path& base_dir) {
  const std::string where = "dense";
  reject_unknown(spec, {"type", "s_matrix_file", "link_up", "link_down", "params"}, where);
  std::filesystem::path file = required<std::string>(spec, "s_matrix_file", where);
  if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
  const json params = spec.contains("params") ? spec.at("params") : json::object();
  if (!params.is_object()) throw ConfigError(where + ": field \"params\" must be an object");
  reject_unknown(params, {"up", "down"}, where + ".params");
  const LinkFunction up =
      parse_link(required<std::string>(spec, "link_up", where),
                 params.contains("up") ? params.at("up") : json(), where + ".params.up");
  const LinkFunction down =
      parse_link(required<std::string>(spec, "link_down", where),
                 params.contains("down") ? params.at("down") : json(), where + ".params.down");
  return std::make_unique<DenseModel>(read_weights_csv(file), up, down);
}

}  // namespace

bool is_run_config_key(const std::string& key) {
  static const std::set<std::string> keys{"method",  "methods",      "delta",      "t_end",
                                          "seed",    "sample_every", "init",       "replicates",
                                          "snapshots", "h",          "model"};
  return keys.count(key) > 0;
}

std::unique_ptr<RateModel> load_model(const json& spec, const std::filesystem::path& base_dir) {
  if (!spec.is_object()) throw ConfigError("model config must be a JSON object");
  const json& body = spec.contains("model") ? spec.at("model") : spec;
  if (!body.is_object()) throw ConfigError("field \"model\" must be an object");
  const auto type = required<std::string>(body, "type", "model");
  if (type == "gauss-conv-1d") return load_gauss(body);
  if (type == "ising-kac-2d") return load_ising(body);
  if (type == "dense") return load_dense(body, base_dir);
  throw ConfigError("model: unsupported type \"" + type + "\"");
}

std::unique_ptr<RateModel> load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model config: " + path.string());
  json spec;
  try {
    spec = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("model config " + path.string() + " is not valid JSON: " + e.what());
  }
  return load_model(spec, path.parent_path());
}

DenseMatrix read_weights_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weight file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end != nullptr && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
      if (end == cell.c_str() || (end != nullptr && *end != '\0')) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": not a number: \"" + cell + "\"");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw ConfigError(path.string() + ": empty weight matrix");
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ConfigError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(rows[i].size()) + " entries, expected " +
                        std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace spinsim
