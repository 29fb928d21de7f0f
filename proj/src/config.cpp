#include "fedtab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedtab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw std::invalid_argument("config key '" + key + "': expected integer, got '" + value + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size() || !std::isfinite(out))
        throw std::invalid_argument("config key '" + key + "': expected number, got '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("config key '" + key + "': expected boolean, got '" + value + "'");
}

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (data_kind != "synth" && data_kind != "series" && data_kind != "tabular")
        throw std::invalid_argument("config key 'data.kind': must be synth, series, or tabular");
    if (data_kind != "synth" && data_path.empty())
        throw std::invalid_argument("config key 'data.path': required for data.kind=" + data_kind);
    if (synth_classes < 2) throw std::invalid_argument("config key 'data.synth_classes': must be >= 2");
    if (synth_dim < 1) throw std::invalid_argument("config key 'data.synth_dim': must be >= 1");
    if (synth_per_class < 1)
        throw std::invalid_argument("config key 'data.synth_per_class': must be >= 1");
    if (!(synth_spread > 0.0))
        throw std::invalid_argument("config key 'data.synth_spread': must be > 0");
    try {
        split.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config keys 'split.*': ") + e.what());
    }
    try {
        federation.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config keys 'federation.*': ") + e.what());
    }
    // model.input_dim / n_classes come from the data; validate the rest.
    TabNetConfig probe = model;
    probe.input_dim = 1;
    probe.n_classes = 2;
    try {
        probe.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config keys 'model.*': ") + e.what());
    }
    if (checkpoint_every < 0)
        throw std::invalid_argument("config key 'output.checkpoint_every': must be >= 0");
    if (history_path.empty())
        throw std::invalid_argument("config key 'output.history_path': must not be empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    bool clients_per_round_set = false;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "data.kind") cfg.data_kind = value;
        else if (key == "data.path") cfg.data_path = value;
        else if (key == "data.synth_classes") cfg.synth_classes = static_cast<int>(parse_int(key, value));
        else if (key == "data.synth_dim") cfg.synth_dim = static_cast<int>(parse_int(key, value));
        else if (key == "data.synth_per_class") cfg.synth_per_class = static_cast<int>(parse_int(key, value));
        else if (key == "data.synth_spread") cfg.synth_spread = parse_real(key, value);
        else if (key == "split.train_frac") cfg.split.train_frac = parse_real(key, value);
        else if (key == "split.pool_frac") cfg.split.pool_frac = parse_real(key, value);
        else if (key == "split.val_frac") cfg.split.val_frac = parse_real(key, value);
        else if (key == "split.test_frac") cfg.split.test_frac = parse_real(key, value);
        else if (key == "split.stratified") cfg.stratified = parse_bool(key, value);
        else if (key == "federation.n_clients") cfg.federation.n_clients = static_cast<int>(parse_int(key, value));
        else if (key == "federation.clients_per_round") {
            cfg.federation.clients_per_round = static_cast<int>(parse_int(key, value));
            clients_per_round_set = true;
        }
        else if (key == "federation.rounds") cfg.federation.total_rounds = static_cast<int>(parse_int(key, value));
        else if (key == "federation.instances_per_round") cfg.federation.instances_per_round = static_cast<int>(parse_int(key, value));
        else if (key == "federation.local_epochs") cfg.federation.local_epochs = static_cast<int>(parse_int(key, value));
        else if (key == "federation.batch_size") cfg.federation.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "federation.parallel_clients") cfg.parallel_clients = parse_bool(key, value);
        else if (key == "model.n_d") cfg.model.n_d = static_cast<int>(parse_int(key, value));
        else if (key == "model.n_a") cfg.model.n_a = static_cast<int>(parse_int(key, value));
        else if (key == "model.n_steps") cfg.model.n_steps = static_cast<int>(parse_int(key, value));
        else if (key == "model.gamma") cfg.model.gamma = parse_real(key, value);
        else if (key == "model.lambda_sparse") cfg.model.lambda_sparse = parse_real(key, value);
        else if (key == "model.bn_momentum") cfg.model.bn_momentum = parse_real(key, value);
        else if (key == "model.lr") cfg.federation.lr = parse_real(key, value);
        else if (key == "output.history_path") cfg.history_path = value;
        else if (key == "output.checkpoint_every") cfg.checkpoint_every = static_cast<int>(parse_int(key, value));
        else if (key == "output.checkpoint_path") cfg.checkpoint_path = value;
        else throw std::invalid_argument("config line " + std::to_string(line_no) +
                                         ": unknown key '" + key + "'");
    }

    if (!clients_per_round_set) cfg.federation.clients_per_round = cfg.federation.n_clients;
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_string(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "seed = " << cfg.seed << "\n";
    out << "data.kind = " << cfg.data_kind << "\n";
    out << "data.path = " << cfg.data_path << "\n";
    out << "data.synth_classes = " << cfg.synth_classes << "\n";
    out << "data.synth_dim = " << cfg.synth_dim << "\n";
    out << "data.synth_per_class = " << cfg.synth_per_class << "\n";
    out << "data.synth_spread = " << fmt_real(cfg.synth_spread) << "\n";
    out << "split.train_frac = " << fmt_real(cfg.split.train_frac) << "\n";
    out << "split.pool_frac = " << fmt_real(cfg.split.pool_frac) << "\n";
    out << "split.val_frac = " << fmt_real(cfg.split.val_frac) << "\n";
    out << "split.test_frac = " << fmt_real(cfg.split.test_frac) << "\n";
    out << "split.stratified = " << (cfg.stratified ? "true" : "false") << "\n";
    out << "federation.n_clients = " << cfg.federation.n_clients << "\n";
    out << "federation.clients_per_round = " << cfg.federation.clients_per_round << "\n";
    out << "federation.rounds = " << cfg.federation.total_rounds << "\n";
    out << "federation.instances_per_round = " << cfg.federation.instances_per_round << "\n";
    out << "federation.local_epochs = " << cfg.federation.local_epochs << "\n";
    out << "federation.batch_size = " << cfg.federation.batch_size << "\n";
    out << "federation.parallel_clients = " << (cfg.parallel_clients ? "true" : "false") << "\n";
    out << "model.n_d = " << cfg.model.n_d << "\n";
    out << "model.n_a = " << cfg.model.n_a << "\n";
    out << "model.n_steps = " << cfg.model.n_steps << "\n";
    out << "model.gamma = " << fmt_real(cfg.model.gamma) << "\n";
    out << "model.lambda_sparse = " << fmt_real(cfg.model.lambda_sparse) << "\n";
    out << "model.bn_momentum = " << fmt_real(cfg.model.bn_momentum) << "\n";
    out << "model.lr = " << fmt_real(cfg.federation.lr) << "\n";
    out << "output.history_path = " << cfg.history_path << "\n";
    out << "output.checkpoint_every = " << cfg.checkpoint_every << "\n";
    out << "output.checkpoint_path = " << cfg.checkpoint_path << "\n";
    return out.str();
}

}  // namespace fedtab
