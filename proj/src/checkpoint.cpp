#include "sslchrono/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sslchrono {

uint64_t fnv1a(const void* bytes, size_t n, uint64_t seed) {
    uint64_t h = seed;
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

void encode_f32_le(float v, unsigned char* out) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    out[0] = static_cast<unsigned char>(bits & 0xFF);
    out[1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
    out[2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
    out[3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
}

float decode_f32_le(const unsigned char* in) {
    const uint32_t bits = static_cast<uint32_t>(in[0]) | (static_cast<uint32_t>(in[1]) << 8) |
                          (static_cast<uint32_t>(in[2]) << 16) | (static_cast<uint32_t>(in[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string shape_field(const Shape& shape) {
    std::string s;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

Shape parse_shape_field(const std::string& s) {
    Shape shape;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t next = s.find('x', pos);
        if (next == std::string::npos) next = s.size();
        int64_t d = 0;
        auto res = std::from_chars(s.data() + pos, s.data() + next, d);
        if (res.ec != std::errc() || d <= 0) io_error("checkpoint: bad shape field '" + s + "'");
        shape.push_back(d);
        pos = next + 1;
    }
    return shape;
}

std::string fmt_double_exact(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(std::string("checkpoint: bad ") + what + " value '" + s + "'");
    return v;
}

int64_t parse_int(const std::string& s, const char* what) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        io_error(std::string("checkpoint: bad ") + what + " value '" + s + "'");
    return v;
}

// Parameter structure with zeroed values; filled from the payload on load.
ModelParams zero_params(const ModelConfig& cfg) {
    ModelParams p;
    p.config = cfg;
    p.input_w = Tensor::zeros({cfg.n_channels, cfg.d_model}, true);
    p.input_b = Tensor::zeros({cfg.d_model}, true);
    p.pos_emb = Tensor::zeros({cfg.seq_len, cfg.d_model}, true);
    p.blocks.resize(static_cast<size_t>(cfg.n_blocks));
    for (auto& b : p.blocks) {
        b.attn.w_q = Tensor::zeros({cfg.d_model, cfg.d_model}, true);
        b.attn.b_q = Tensor::zeros({cfg.d_model}, true);
        b.attn.w_k = Tensor::zeros({cfg.d_model, cfg.d_model}, true);
        b.attn.b_k = Tensor::zeros({cfg.d_model}, true);
        b.attn.w_v = Tensor::zeros({cfg.d_model, cfg.d_model}, true);
        b.attn.b_v = Tensor::zeros({cfg.d_model}, true);
        b.attn.w_o = Tensor::zeros({cfg.d_model, cfg.d_model}, true);
        b.attn.b_o = Tensor::zeros({cfg.d_model}, true);
        b.ln_gamma = Tensor::zeros({cfg.d_model}, true);
        b.ln_beta = Tensor::zeros({cfg.d_model}, true);
    }
    p.head.weight = Tensor::zeros({cfg.d_model, cfg.head_width()}, true);
    p.head.bias = Tensor::zeros({cfg.head_width()}, true);
    return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    const auto named = params.named();
    std::vector<unsigned char> payload;
    std::ostringstream manifest;
    manifest << "SSLCHRONO_CKPT " << kCheckpointVersion << "\n";
    const ModelConfig& c = params.config;
    manifest << "n_blocks " << c.n_blocks << "\n";
    manifest << "d_model " << c.d_model << "\n";
    manifest << "n_heads " << c.n_heads << "\n";
    manifest << "seq_len " << c.seq_len << "\n";
    manifest << "n_channels " << c.n_channels << "\n";
    manifest << "dropout_p " << fmt_double_exact(c.dropout_p) << "\n";
    manifest << "residual " << (c.residual ? 1 : 0) << "\n";
    manifest << "head_kind " << head_kind_name(c.head_kind) << "\n";
    manifest << "params " << named.size() << "\n";
    for (const auto& np : named) {
        const size_t offset = payload.size();
        auto values = np.tensor.data();
        payload.resize(payload.size() + values.size() * 4);
        for (size_t i = 0; i < values.size(); ++i)
            encode_f32_le(values[i], payload.data() + offset + i * 4);
        manifest << np.name << ' ' << (np.is_head ? "head" : "backbone") << ' '
                 << shape_field(np.tensor.shape()) << ' ' << offset << "\n";
    }
    manifest << "payload_bytes " << payload.size() << "\n";
    char csum[32];
    std::snprintf(csum, sizeof(csum), "%016llx",
                  static_cast<unsigned long long>(fnv1a(payload.data(), payload.size())));
    manifest << "checksum " << csum << "\n";
    manifest << "DATA\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) io_error("cannot open checkpoint file for writing: " + path);
    const std::string header = manifest.str();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) io_error("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error("cannot open checkpoint file: " + path);

    auto next_line = [&in, &path]() {
        std::string line;
        if (!std::getline(in, line)) io_error("checkpoint truncated: " + path);
        return line;
    };
    auto split2 = [](const std::string& line) {
        const size_t sp = line.find(' ');
        if (sp == std::string::npos) io_error("checkpoint: malformed line '" + line + "'");
        return std::pair<std::string, std::string>(line.substr(0, sp), line.substr(sp + 1));
    };

    {
        auto [magic, version] = split2(next_line());
        if (magic != "SSLCHRONO_CKPT") io_error("not a checkpoint file: " + path);
        if (parse_int(version, "version") != kCheckpointVersion)
            io_error("unsupported checkpoint version " + version);
    }

    ModelConfig cfg;
    size_t n_params = 0;
    for (;;) {
        auto [key, value] = split2(next_line());
        if (key == "n_blocks") cfg.n_blocks = static_cast<int>(parse_int(value, key.c_str()));
        else if (key == "d_model") cfg.d_model = static_cast<int>(parse_int(value, key.c_str()));
        else if (key == "n_heads") cfg.n_heads = static_cast<int>(parse_int(value, key.c_str()));
        else if (key == "seq_len") cfg.seq_len = static_cast<int>(parse_int(value, key.c_str()));
        else if (key == "n_channels") cfg.n_channels = static_cast<int>(parse_int(value, key.c_str()));
        else if (key == "dropout_p") cfg.dropout_p = parse_double(value, key.c_str());
        else if (key == "residual") cfg.residual = parse_int(value, key.c_str()) != 0;
        else if (key == "head_kind") {
            if (value == "regression") cfg.head_kind = HeadKind::kRegression;
            else if (value == "classification") cfg.head_kind = HeadKind::kClassification;
            else io_error("checkpoint: unknown head kind '" + value + "'");
        } else if (key == "params") {
            n_params = static_cast<size_t>(parse_int(value, key.c_str()));
            break;
        } else io_error("checkpoint: unexpected manifest key '" + key + "'");
    }
    cfg.validate();

    struct Entry {
        std::string name;
        bool is_head;
        Shape shape;
        size_t offset;
    };
    std::vector<Entry> entries;
    entries.reserve(n_params);
    for (size_t i = 0; i < n_params; ++i) {
        std::istringstream ls(next_line());
        Entry e;
        std::string tag, shape_s, offset_s;
        if (!(ls >> e.name >> tag >> shape_s >> offset_s))
            io_error("checkpoint: malformed parameter line");
        if (tag != "head" && tag != "backbone") io_error("checkpoint: bad parameter tag '" + tag + "'");
        e.is_head = tag == "head";
        e.shape = parse_shape_field(shape_s);
        e.offset = static_cast<size_t>(parse_int(offset_s, "offset"));
        entries.push_back(std::move(e));
    }

    size_t payload_bytes = 0;
    uint64_t expected_checksum = 0;
    {
        auto [key, value] = split2(next_line());
        if (key != "payload_bytes") io_error("checkpoint: expected payload_bytes line");
        payload_bytes = static_cast<size_t>(parse_int(value, key.c_str()));
    }
    {
        auto [key, value] = split2(next_line());
        if (key != "checksum") io_error("checkpoint: expected checksum line");
        expected_checksum = std::stoull(value, nullptr, 16);
    }
    if (next_line() != "DATA") io_error("checkpoint: expected DATA marker");

    std::vector<unsigned char> payload(payload_bytes);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload_bytes));
    if (static_cast<size_t>(in.gcount()) != payload_bytes)
        io_error("checkpoint payload truncated: " + path);
    if (fnv1a(payload.data(), payload.size()) != expected_checksum)
        io_error("checkpoint checksum mismatch; file is corrupted: " + path);

    ModelParams params = zero_params(cfg);
    auto named = params.named();
    if (named.size() != entries.size())
        io_error("checkpoint lists " + std::to_string(entries.size()) + " parameters, expected " +
                 std::to_string(named.size()));
    for (size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        if (e.name != named[i].name || e.is_head != named[i].is_head)
            io_error("checkpoint parameter '" + e.name + "' does not match expected '" +
                     named[i].name + "'");
        if (e.shape != named[i].tensor.shape())
            io_error("checkpoint parameter '" + e.name + "' has shape " + shape_str(e.shape) +
                     ", expected " + shape_str(named[i].tensor.shape()));
        auto dst = named[i].tensor.data();
        const size_t bytes = dst.size() * 4;
        if (e.offset + bytes > payload.size())
            io_error("checkpoint parameter '" + e.name + "' overruns the payload");
        for (size_t j = 0; j < dst.size(); ++j)
            dst[j] = decode_f32_le(payload.data() + e.offset + j * 4);
    }
    return params;
}

}  // namespace sslchrono
