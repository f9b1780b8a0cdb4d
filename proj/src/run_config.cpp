#include "sslchrono/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sslchrono {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int64_t parse_i64(const std::string& key, const std::string& value) {
    int64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        config_error("key '" + key + "' expects an integer, got '" + value + "'");
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        config_error("key '" + key + "' expects an unsigned integer, got '" + value + "'");
    return v;
}

double parse_f64(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        config_error("key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    config_error("key '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<int>(parse_i64(key, item)));
    }
    if (out.empty()) config_error("key '" + key + "' expects a comma-separated list of integers");
    return out;
}

std::string fmt_num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "seed") seed = parse_u64(key, value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "cohort.participants") cohort.n_participants = static_cast<int>(parse_i64(key, value));
    else if (key == "cohort.horizon_days") cohort.horizon_days = static_cast<int>(parse_i64(key, value));
    else if (key == "cohort.prevalence") cohort.illness_prevalence = parse_f64(key, value);
    else if (key == "cohort.episode_duration") cohort.episode_duration = static_cast<int>(parse_i64(key, value));
    else if (key == "cohort.base_missing_rate") cohort.base_missing_rate = parse_f64(key, value);
    else if (key == "cohort.illness_missing_boost") cohort.illness_missing_boost = parse_f64(key, value);
    else if (key == "cohort.illness_rhr_delta") cohort.illness_rhr_delta = parse_f64(key, value);
    else if (key == "cohort.illness_tib_delta") cohort.illness_tib_delta = parse_f64(key, value);
    else if (key == "cohort.illness_cal_factor") cohort.illness_cal_factor = parse_f64(key, value);
    else if (key == "cohort.rhr.mean") cohort.rhr.base_mean = parse_f64(key, value);
    else if (key == "cohort.rhr.std") cohort.rhr.base_std = parse_f64(key, value);
    else if (key == "cohort.rhr.season") cohort.rhr.season_amp = parse_f64(key, value);
    else if (key == "cohort.rhr.noise") cohort.rhr.noise_std = parse_f64(key, value);
    else if (key == "cohort.tib.mean") cohort.tib.base_mean = parse_f64(key, value);
    else if (key == "cohort.tib.std") cohort.tib.base_std = parse_f64(key, value);
    else if (key == "cohort.tib.season") cohort.tib.season_amp = parse_f64(key, value);
    else if (key == "cohort.tib.noise") cohort.tib.noise_std = parse_f64(key, value);
    else if (key == "cohort.cal.mean") cohort.cal.base_mean = parse_f64(key, value);
    else if (key == "cohort.cal.std") cohort.cal.base_std = parse_f64(key, value);
    else if (key == "cohort.cal.season") cohort.cal.season_amp = parse_f64(key, value);
    else if (key == "cohort.cal.noise") cohort.cal.noise_std = parse_f64(key, value);
    else if (key == "model.blocks") model.n_blocks = static_cast<int>(parse_i64(key, value));
    else if (key == "model.d_model") model.d_model = static_cast<int>(parse_i64(key, value));
    else if (key == "model.heads") model.n_heads = static_cast<int>(parse_i64(key, value));
    else if (key == "model.seq_len") model.seq_len = static_cast<int>(parse_i64(key, value));
    else if (key == "model.dropout") model.dropout_p = parse_f64(key, value);
    else if (key == "model.residual") model.residual = parse_bool(key, value);
    else if (key == "train.pretrain_epochs") pretrain_epochs = static_cast<int>(parse_i64(key, value));
    else if (key == "train.finetune_epochs") finetune_epochs = static_cast<int>(parse_i64(key, value));
    else if (key == "train.batch_size") batch_size = static_cast<int>(parse_i64(key, value));
    else if (key == "train.pretrain_lr0") pretrain_lr0 = parse_f64(key, value);
    else if (key == "train.finetune_lr0") finetune_lr0 = parse_f64(key, value);
    else if (key == "train.clip") clip = parse_f64(key, value);
    else if (key == "train.beta1") beta1 = parse_f64(key, value);
    else if (key == "train.beta2") beta2 = parse_f64(key, value);
    else if (key == "train.adam_eps") adam_eps = parse_f64(key, value);
    else if (key == "sweep.sizes") adaptation_sizes = parse_int_list(key, value);
    else if (key == "sweep.test_participants") test_participants = static_cast<int>(parse_i64(key, value));
    else if (key == "sweep.neg_ratio") neg_ratio = static_cast<int>(parse_i64(key, value));
    else if (key == "sweep.baseline") sweep_baseline = parse_bool(key, value);
    else if (key == "sweep.threads") threads = static_cast<int>(parse_i64(key, value));
    else config_error("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["seed"] = std::to_string(seed);
    m["out_dir"] = out_dir;
    m["cohort.participants"] = std::to_string(cohort.n_participants);
    m["cohort.horizon_days"] = std::to_string(cohort.horizon_days);
    m["cohort.prevalence"] = fmt_num(cohort.illness_prevalence);
    m["cohort.episode_duration"] = std::to_string(cohort.episode_duration);
    m["cohort.base_missing_rate"] = fmt_num(cohort.base_missing_rate);
    m["cohort.illness_missing_boost"] = fmt_num(cohort.illness_missing_boost);
    m["cohort.illness_rhr_delta"] = fmt_num(cohort.illness_rhr_delta);
    m["cohort.illness_tib_delta"] = fmt_num(cohort.illness_tib_delta);
    m["cohort.illness_cal_factor"] = fmt_num(cohort.illness_cal_factor);
    m["cohort.rhr.mean"] = fmt_num(cohort.rhr.base_mean);
    m["cohort.rhr.std"] = fmt_num(cohort.rhr.base_std);
    m["cohort.rhr.season"] = fmt_num(cohort.rhr.season_amp);
    m["cohort.rhr.noise"] = fmt_num(cohort.rhr.noise_std);
    m["cohort.tib.mean"] = fmt_num(cohort.tib.base_mean);
    m["cohort.tib.std"] = fmt_num(cohort.tib.base_std);
    m["cohort.tib.season"] = fmt_num(cohort.tib.season_amp);
    m["cohort.tib.noise"] = fmt_num(cohort.tib.noise_std);
    m["cohort.cal.mean"] = fmt_num(cohort.cal.base_mean);
    m["cohort.cal.std"] = fmt_num(cohort.cal.base_std);
    m["cohort.cal.season"] = fmt_num(cohort.cal.season_amp);
    m["cohort.cal.noise"] = fmt_num(cohort.cal.noise_std);
    m["model.blocks"] = std::to_string(model.n_blocks);
    m["model.d_model"] = std::to_string(model.d_model);
    m["model.heads"] = std::to_string(model.n_heads);
    m["model.seq_len"] = std::to_string(model.seq_len);
    m["model.dropout"] = fmt_num(model.dropout_p);
    m["model.residual"] = model.residual ? "true" : "false";
    m["train.pretrain_epochs"] = std::to_string(pretrain_epochs);
    m["train.finetune_epochs"] = std::to_string(finetune_epochs);
    m["train.batch_size"] = std::to_string(batch_size);
    m["train.pretrain_lr0"] = fmt_num(pretrain_lr0);
    m["train.finetune_lr0"] = fmt_num(finetune_lr0);
    m["train.clip"] = fmt_num(clip);
    m["train.beta1"] = fmt_num(beta1);
    m["train.beta2"] = fmt_num(beta2);
    m["train.adam_eps"] = fmt_num(adam_eps);
    m["sweep.sizes"] = fmt_int_list(adaptation_sizes);
    m["sweep.test_participants"] = std::to_string(test_participants);
    m["sweep.neg_ratio"] = std::to_string(neg_ratio);
    m["sweep.baseline"] = sweep_baseline ? "true" : "false";
    m["sweep.threads"] = std::to_string(threads);
    return m;
}

void RunConfig::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error("cannot write config file: " + path);
    for (const auto& [k, v] : to_map()) out << k << " = " << v << "\n";
}

TrainConfig RunConfig::pretrain_config() const {
    TrainConfig c;
    c.epochs = pretrain_epochs;
    c.batch_size = batch_size;
    c.lr0 = pretrain_lr0;
    c.clip = clip;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.adam_eps = adam_eps;
    c.seed = seed;
    return c;
}

TrainConfig RunConfig::finetune_config() const {
    TrainConfig c = pretrain_config();
    c.epochs = finetune_epochs;
    c.lr0 = finetune_lr0;
    return c;
}

SweepSetup RunConfig::sweep_setup() const {
    SweepSetup s;
    s.model = model;
    s.pretrain_cfg = pretrain_config();
    s.finetune_cfg = finetune_config();
    s.adaptation_sizes = adaptation_sizes;
    s.neg_ratio = neg_ratio;
    s.include_baseline = sweep_baseline;
    s.threads = threads;
    s.master_seed = seed;
    return s;
}

void RunConfig::validate() const {
    cohort.validate();
    model.validate();
    pretrain_config().validate();
    finetune_config().validate();
    if (adaptation_sizes.empty()) config_error("sweep.sizes must not be empty");
    if (test_participants < 2) config_error("sweep.test_participants must be >= 2");
    if (neg_ratio < 0) config_error("sweep.neg_ratio must be >= 0");
    if (threads < 1) config_error("sweep.threads must be >= 1");
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) io_error("cannot open config file: " + config_path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const size_t eq = t.find('=');
            if (eq == std::string::npos)
                config_error(config_path + ":" + std::to_string(line_no) + ": expected key = value");
            cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }
    if (const char* env_seed = std::getenv("SSLCHRONO_SEED")) cfg.apply("seed", env_seed);
    for (const auto& o : overrides) {
        const size_t eq = o.find('=');
        if (eq == std::string::npos) config_error("override '" + o + "' must be key=value");
        cfg.apply(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

}  // namespace sslchrono
