#pragma once

// Experiment configuration: a sectioned key = value text file.
//
//   [model]    kind seed vocab max_len order concentration lambda
//              grid_width grid_height
//   [sampler]  temperature top_k cfg_weight
//   [decode]   kind window_size max_new_tokens init_strategy prompt archive
//   [run]      seed trials output repeats threads
//
// Unknown sections or keys are errors naming the offending key.

#include <filesystem>
#include <string>

#include "sjd/bench.hpp"

namespace sjd {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  RunSpec spec;                 // model, decode, prompt, seed, archive
  std::size_t trials = 200'000;
  std::size_t repeats = 1;
  std::size_t threads = 0;
  std::string output = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sjd
