#pragma once

#include <cstdint>
#include <string>

#include "fedtab/data.hpp"
#include "fedtab/federation.hpp"
#include "fedtab/model.hpp"

namespace fedtab {

// Flat INI-style experiment configuration: one "section.key = value" per
// line, '#' comments. Unknown keys are rejected; every key has a default.
// See README for the key reference.
struct ExperimentConfig {
    std::uint64_t seed = 42;

    // data
    std::string data_kind = "synth";  // synth | series | tabular
    std::string data_path;
    int synth_classes = 3;
    int synth_dim = 10;
    int synth_per_class = 200;
    double synth_spread = 0.25;

    SplitSpec split;
    bool stratified = true;

    RoundConfig federation;
    bool parallel_clients = false;

    TabNetConfig model;  // input_dim/n_classes filled in from the data

    std::string history_path = "history.jsonl";
    int checkpoint_every = 0;
    std::string checkpoint_path = "checkpoint";

    void validate() const;  // throws std::invalid_argument naming the key
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Normalized "section.key = value" rendering of every key.
std::string config_to_string(const ExperimentConfig& cfg);

}  // namespace fedtab
