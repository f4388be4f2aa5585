#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"
#include "spinsim/fast_sum.hpp"
#include "spinsim/rate_model.hpp"

namespace spinsim {

/// Builds a model from its JSON description:
///
///   {"type":"gauss-conv-1d","n":2000,"sigma":20.0,"death_rate":1.0}
///   {"type":"ising-kac-2d","side":64,"beta":1.0,"a":0.009765625,"periodic":true}
///   {"type":"ising-kac-2d","side":64,"beta":1.0,"a_scale":40.0}       (a = a_scale / n)
///   {"type":"dense","s_matrix_file":"weights.csv","link_up":"linear-with-floor",
///    "link_down":"constant","params":{"up":{"scale":1.0},"down":{"value":1.0}}}
///
/// Lattice models also accept "periodic" (default false) and "sum" ("fft" or
/// "direct"). Relative weight-file paths resolve against base_dir. Keys that
/// belong to the run configuration are ignored here; any other unknown key is
/// a ConfigError naming it.
std::unique_ptr<RateModel> load_model(const nlohmann::json& spec,
                                      const std::filesystem::path& base_dir = {});

std::unique_ptr<RateModel> load_model_file(const std::filesystem::path& path);

/// Reads a square matrix stored as comma-separated rows.
DenseMatrix read_weights_csv(const std::filesystem::path& path);

/// Run-level keys that may share a config file with the model description.
bool is_run_config_key(const std::string& key);

}  // namespace spinsim
