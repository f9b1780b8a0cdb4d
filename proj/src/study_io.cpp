#include "sslchrono/study_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sslchrono {

std::string fmt_float(float v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_double(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

float parse_float(const std::string& s, const std::string& where) {
    float v = 0.0f;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(where + ": bad float value '" + s + "'");
    return v;
}

double parse_dbl(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(where + ": bad number '" + s + "'");
    return v;
}

int64_t parse_i64(const std::string& s, const std::string& where) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(where + ": bad integer '" + s + "'");
    return v;
}

uint64_t parse_u64(const std::string& s, const std::string& where) {
    uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(where + ": bad unsigned integer '" + s + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error("cannot open file for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_error("cannot open file: " + path);
    return in;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_dataset_csv(const std::string& path, std::span<const ParticipantSeries> cohort) {
    auto out = open_out(path);
    out << kDatasetHeader << "\n";
    for (const auto& s : cohort)
        for (size_t d = 0; d < s.days.size(); ++d) {
            const DayRecord& r = s.days[d];
            out << s.participant_id << ',' << d << ',' << fmt_float(r.rhr) << ',' << fmt_float(r.tib)
                << ',' << fmt_float(r.cal) << ',' << int(r.rhr_missing) << ',' << int(r.tib_missing)
                << ',' << int(r.cal_missing) << ',' << int(r.ili_positive) << "\n";
        }
    if (!out) io_error("failed writing dataset: " + path);
}

std::vector<ParticipantSeries> load_dataset_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) io_error("dataset file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDatasetHeader)
        io_error("dataset header mismatch in " + path + "; expected '" + kDatasetHeader + "'");
    std::map<int, ParticipantSeries> by_id;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        auto f = split_csv(line);
        if (f.size() != 9) io_error(where + ": expected 9 fields, got " + std::to_string(f.size()));
        const int pid = static_cast<int>(parse_i64(f[0], where));
        const int day = static_cast<int>(parse_i64(f[1], where));
        DayRecord r;
        r.rhr = parse_float(f[2], where);
        r.tib = parse_float(f[3], where);
        r.cal = parse_float(f[4], where);
        r.rhr_missing = static_cast<uint8_t>(parse_i64(f[5], where));
        r.tib_missing = static_cast<uint8_t>(parse_i64(f[6], where));
        r.cal_missing = static_cast<uint8_t>(parse_i64(f[7], where));
        r.ili_positive = static_cast<uint8_t>(parse_i64(f[8], where));
        auto& series = by_id[pid];
        series.participant_id = pid;
        if (day != static_cast<int>(series.days.size()))
            io_error(where + ": days of participant " + std::to_string(pid) +
                     " are not consecutive from zero");
        series.days.push_back(r);
    }
    std::vector<ParticipantSeries> cohort;
    cohort.reserve(by_id.size());
    for (auto& [pid, series] : by_id) cohort.push_back(std::move(series));
    if (cohort.empty()) io_error("dataset contains no rows: " + path);
    return cohort;
}

void write_stats_csv(const std::string& path, const FeatureStats& stats) {
    auto out = open_out(path);
    out << "feature,mean,std\n";
    for (int f = 0; f < kNumFeatures; ++f)
        out << feature_name(static_cast<Feature>(f)) << ',' << fmt_double(stats.mean[static_cast<size_t>(f)])
            << ',' << fmt_double(stats.stddev[static_cast<size_t>(f)]) << "\n";
}

FeatureStats load_stats_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || (line != "feature,mean,std" && line != "feature,mean,std\r"))
        io_error("stats header mismatch in " + path);
    FeatureStats stats;
    std::array<bool, kNumFeatures> seen{};
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 3) io_error(path + ": expected 3 fields");
        auto feat = feature_from_name(f[0]);
        if (!feat) io_error(path + ": unknown feature '" + f[0] + "'");
        const auto i = static_cast<size_t>(*feat);
        stats.mean[i] = parse_dbl(f[1], path);
        stats.stddev[i] = parse_dbl(f[2], path);
        seen[i] = true;
    }
    for (int f = 0; f < kNumFeatures; ++f)
        if (!seen[static_cast<size_t>(f)])
            io_error(path + ": missing statistics for feature '" +
                     feature_name(static_cast<Feature>(f)) + "'");
    return stats;
}

void write_splits_csv(const std::string& path, const CohortSplit& split) {
    auto out = open_out(path);
    out << "participant_id,split,adaptation_order\n";
    for (int id : split.ssl_train) out << id << ",ssl_train,\n";
    for (size_t i = 0; i < split.adaptation_order.size(); ++i)
        out << split.adaptation_order[i] << ",adaptation," << i << "\n";
    for (int id : split.test) out << id << ",test,\n";
    out << "# sizes " << [&] {
        std::string s;
        for (size_t i = 0; i < split.adaptation_sizes.size(); ++i) {
            if (i) s += ' ';
            s += std::to_string(split.adaptation_sizes[i]);
        }
        return s;
    }() << "\n";
}

CohortSplit load_splits_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) io_error("splits file is empty: " + path);
    CohortSplit split;
    std::vector<std::pair<int, int>> adaptation;  // (order, id)
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# sizes", 0) == 0) {
            std::istringstream ss(line.substr(7));
            int n;
            while (ss >> n) split.adaptation_sizes.push_back(n);
            continue;
        }
        auto f = split_csv(line);
        if (f.size() != 3) io_error(path + ": expected 3 fields, got '" + line + "'");
        const int id = static_cast<int>(parse_i64(f[0], path));
        if (f[1] == "ssl_train") split.ssl_train.push_back(id);
        else if (f[1] == "test") split.test.push_back(id);
        else if (f[1] == "adaptation")
            adaptation.emplace_back(static_cast<int>(parse_i64(f[2], path)), id);
        else io_error(path + ": unknown split '" + f[1] + "'");
    }
    std::sort(adaptation.begin(), adaptation.end());
    for (auto& [order, id] : adaptation) split.adaptation_order.push_back(id);
    if (split.adaptation_sizes.empty()) io_error(path + ": missing '# sizes' footer");
    return split;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
    auto out = open_out(path);
    out << "epoch,loss,lr,grad_norm\n";
    const size_t epochs = report.epoch_loss.size();
    const size_t steps_per_epoch = epochs ? report.lr_trace.size() / epochs : 0;
    for (size_t e = 0; e < epochs; ++e) {
        // lr and grad norm reported at the last step of the epoch
        const size_t last = std::min(report.lr_trace.size(), (e + 1) * steps_per_epoch) - 1;
        out << e << ',' << fmt_double(report.epoch_loss[e]) << ',' << fmt_double(report.lr_trace[last])
            << ',' << fmt_double(report.grad_norm_trace[last]) << "\n";
    }
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
    auto out = open_out(path);
    out << "objective,n_adaptation,auc,seed,paper_reference_auc\n";
    for (const auto& c : result.cells) {
        out << c.objective << ',' << c.n_adaptation << ',';
        if (c.ok) out << fmt_double(c.auc_value);
        else out << "nan";
        out << ',' << c.seed << ',';
        if (c.paper_reference) out << fmt_double(*c.paper_reference);
        out << "\n";
    }
}

SweepResult load_sweep_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) io_error("sweep file is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "objective,n_adaptation,auc,seed,paper_reference_auc")
        io_error("sweep header mismatch in " + path);
    SweepResult result;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 5) io_error(path + ": expected 5 fields, got '" + line + "'");
        SweepCell c;
        c.objective = f[0];
        c.n_adaptation = static_cast<int>(parse_i64(f[1], path));
        if (f[2] == "nan") {
            c.ok = false;
            c.auc_value = std::nan("");
        } else {
            c.ok = true;
            c.auc_value = parse_dbl(f[2], path);
        }
        c.seed = parse_u64(f[3], path);
        if (!f[4].empty()) c.paper_reference = parse_dbl(f[4], path);
        result.cells.push_back(std::move(c));
    }
    return result;
}

void write_scores_csv(const std::string& path, const ScoredSet& scored,
                      const std::vector<int>& window_end_days) {
    auto out = open_out(path);
    out << "participant_id,window_end_day,score,label\n";
    for (size_t i = 0; i < scored.scores.size(); ++i) {
        out << scored.participant_ids[i] << ','
            << (i < window_end_days.size() ? window_end_days[i] : -1) << ','
            << fmt_float(scored.scores[i]) << ',' << scored.labels[i] << "\n";
    }
}

}  // namespace sslchrono
