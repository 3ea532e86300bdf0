#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hybridft/error.hpp"
#include "hybridft/io.hpp"
#include "hybridft/model.hpp"

namespace hybridft::cli {

// Checkpoint container: a short text header (version, config hash, step,
// segment count) followed by named binary segments.  Each segment carries a
// scalar kind (real or complex-interleaved), its dimensions, and a
// length-prefixed little-endian payload of 64-bit floats.  Round-trips are
// bit-exact.
//
//   HFTCKPT1
//   config_hash <hex>
//   mode <adapter mode>
//   step <n>
//   segments <k>
//   ---
//   [k segments]

inline constexpr char kCheckpointMagic[] = "HFTCKPT1";

struct Segment {
    std::uint8_t kind = 0;  // 0 = real, 1 = complex interleaved
    std::vector<std::uint64_t> dims;
    std::vector<double> payload;
};

namespace detail {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw data_error("checkpoint: truncated segment data");
    return v;
}

inline Segment from_matrix(const num::Matrix& m) {
    Segment s;
    s.kind = 0;
    s.dims = {m.rows(), m.cols()};
    s.payload = m.data();
    return s;
}

inline Segment from_cmatrix(const num::CMatrix& m) {
    Segment s;
    s.kind = 1;
    s.dims = {m.rows(), m.cols()};
    s.payload.reserve(2 * m.size());
    for (const auto& z : m.data()) {
        s.payload.push_back(z.real());
        s.payload.push_back(z.imag());
    }
    return s;
}

inline Segment from_values(std::vector<double> v) {
    Segment s;
    s.kind = 0;
    s.dims = {v.size()};
    s.payload = std::move(v);
    return s;
}

inline num::Matrix to_matrix(const Segment& s, const std::string& name) {
    if (s.kind != 0 || s.dims.size() != 2)
        throw data_error("checkpoint: segment " + name + " is not a real matrix");
    return num::Matrix(s.dims[0], s.dims[1], s.payload);
}

inline num::CMatrix to_cmatrix(const Segment& s, const std::string& name) {
    if (s.kind != 1 || s.dims.size() != 2)
        throw data_error("checkpoint: segment " + name + " is not a complex matrix");
    std::vector<std::complex<double>> entries(s.payload.size() / 2);
    for (std::size_t i = 0; i < entries.size(); ++i)
        entries[i] = {s.payload[2 * i], s.payload[2 * i + 1]};
    return num::CMatrix(s.dims[0], s.dims[1], std::move(entries));
}

}  // namespace detail

using SegmentMap = std::map<std::string, Segment>;

inline SegmentMap model_segments(const train::ToyModel& model) {
    using namespace detail;
    SegmentMap seg;
    seg["model/meta"] = from_values({static_cast<double>(static_cast<int>(model.mode)),
                                     static_cast<double>(model.version),
                                     static_cast<double>(model.embed.dim),
                                     model.eta_boft});
    for (std::size_t l = 0; l < model.w0.size(); ++l)
        seg["base/w0." + std::to_string(l)] = from_matrix(model.w0[l]);
    seg["head/w"] = from_matrix(model.head_w);
    seg["head/b"] = from_values(model.head_b);

    auto lora_segments = [&seg](const std::string& prefix, const adapt::LoraState& s) {
        seg[prefix + "/a"] = from_matrix(s.a);
        seg[prefix + "/b"] = from_matrix(s.b);
        seg[prefix + "/meta"] = from_values({static_cast<double>(s.rank), s.alpha,
                                             s.lambda_cap, s.w0_fro});
    };

    for (std::size_t l = 0; l < model.lora.size(); ++l)
        lora_segments("lora" + std::to_string(l), model.lora[l]);

    for (std::size_t l = 0; l < model.boft.size(); ++l) {
        const auto& s = model.boft[l];
        const std::string prefix = "boft" + std::to_string(l);
        std::vector<double> strides(s.strides.begin(), s.strides.end());
        seg[prefix + "/strides"] = from_values(std::move(strides));
        for (std::size_t b = 0; b < s.blocks.size(); ++b)
            seg[prefix + "/block" + std::to_string(b)] = from_matrix(s.blocks[b]);
    }

    for (std::size_t l = 0; l < model.urnn.size(); ++l)
        seg["urnn" + std::to_string(l) + "/u"] = from_cmatrix(model.urnn[l]);

    for (std::size_t l = 0; l < model.hybrid.size(); ++l) {
        const auto& h = model.hybrid[l];
        const std::string prefix = "hybrid" + std::to_string(l);
        seg[prefix + "/w"] = from_matrix(h.w);
        lora_segments(prefix + "/lora", h.lora);
        seg[prefix + "/q"] = from_matrix(h.skew.q);
        seg[prefix + "/r"] = from_matrix(h.r_cache);
        seg[prefix + "/meta"] = from_values({h.skew.eta_boft,
                                             static_cast<double>(h.trace.layer),
                                             static_cast<double>(h.trace.step),
                                             h.trace.g_lora, h.trace.g_boft,
                                             h.trace.lambda});
    }
    return seg;
}

inline void save_checkpoint(const train::ToyModel& model, const std::string& config_hash,
                            std::size_t step, const std::string& path) {
    const SegmentMap seg = model_segments(model);
    AtomicWriter w(path);
    std::ofstream& out = w.stream();
    out << kCheckpointMagic << "\n";
    out << "config_hash " << config_hash << "\n";
    out << "mode " << train::to_string(model.mode) << "\n";
    out << "step " << step << "\n";
    out << "segments " << seg.size() << "\n";
    out << "---\n";
    for (const auto& [name, s] : seg) {
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<long>(name.size()));
        detail::write_pod<std::uint8_t>(out, s.kind);
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims.size()));
        for (std::uint64_t d : s.dims) detail::write_pod<std::uint64_t>(out, d);
        detail::write_pod<std::uint64_t>(out, s.payload.size() * sizeof(double));
        out.write(reinterpret_cast<const char*>(s.payload.data()),
                  static_cast<long>(s.payload.size() * sizeof(double)));
    }
    w.commit();
}

struct CheckpointData {
    std::string config_hash;
    std::string mode;
    std::size_t step = 0;
    SegmentMap segments;
};

inline CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open checkpoint: " + path);
    std::string line;
    std::getline(in, line);
    if (line != kCheckpointMagic) throw data_error("checkpoint: bad magic in " + path);

    CheckpointData ckpt;
    std::size_t n_segments = 0;
    while (std::getline(in, line) && line != "---") {
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos) throw data_error("checkpoint: malformed header line");
        const std::string key = line.substr(0, sp);
        const std::string value = line.substr(sp + 1);
        if (key == "config_hash") ckpt.config_hash = value;
        else if (key == "mode") ckpt.mode = value;
        else if (key == "step") ckpt.step = std::stoull(value);
        else if (key == "segments") n_segments = std::stoull(value);
    }

    for (std::size_t i = 0; i < n_segments; ++i) {
        const auto name_len = detail::read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        Segment s;
        s.kind = detail::read_pod<std::uint8_t>(in);
        const auto ndims = detail::read_pod<std::uint32_t>(in);
        for (std::uint32_t d = 0; d < ndims; ++d)
            s.dims.push_back(detail::read_pod<std::uint64_t>(in));
        const auto bytes = detail::read_pod<std::uint64_t>(in);
        s.payload.resize(bytes / sizeof(double));
        in.read(reinterpret_cast<char*>(s.payload.data()), static_cast<long>(bytes));
        if (!in) throw data_error("checkpoint: truncated payload in segment " + name);
        ckpt.segments[name] = std::move(s);
    }
    return ckpt;
}

inline train::ToyModel model_from_checkpoint(const CheckpointData& ckpt) {
    using namespace detail;
    auto need = [&ckpt](const std::string& name) -> const Segment& {
        const auto it = ckpt.segments.find(name);
        if (it == ckpt.segments.end())
            throw data_error("checkpoint: missing segment " + name);
        return it->second;
    };

    train::ToyModel model;
    const Segment& meta = need("model/meta");
    if (meta.payload.size() != 4) throw data_error("checkpoint: bad model/meta");
    model.mode = static_cast<train::AdapterMode>(static_cast<int>(meta.payload[0]));
    model.version = static_cast<std::uint64_t>(meta.payload[1]);
    model.embed = train::Featurizer(static_cast<std::size_t>(meta.payload[2]));
    model.eta_boft = meta.payload[3];

    for (std::size_t l = 0;; ++l) {
        const auto it = ckpt.segments.find("base/w0." + std::to_string(l));
        if (it == ckpt.segments.end()) break;
        model.w0.push_back(to_matrix(it->second, it->first));
    }
    model.head_w = to_matrix(need("head/w"), "head/w");
    model.head_b = need("head/b").payload;

    auto load_lora = [&need](const std::string& prefix) {
        adapt::LoraState s;
        s.a = to_matrix(need(prefix + "/a"), prefix + "/a");
        s.b = to_matrix(need(prefix + "/b"), prefix + "/b");
        const Segment& m = need(prefix + "/meta");
        if (m.payload.size() != 4) throw data_error("checkpoint: bad " + prefix + "/meta");
        s.rank = static_cast<std::size_t>(m.payload[0]);
        s.alpha = m.payload[1];
        s.lambda_cap = m.payload[2];
        s.w0_fro = m.payload[3];
        return s;
    };

    switch (model.mode) {
        case train::AdapterMode::full:
            break;
        case train::AdapterMode::lora:
        case train::AdapterMode::lora_ga:
            for (std::size_t l = 0; l < model.w0.size(); ++l)
                model.lora.push_back(load_lora("lora" + std::to_string(l)));
            break;
        case train::AdapterMode::boft:
            for (std::size_t l = 0; l < model.w0.size(); ++l) {
                const std::string prefix = "boft" + std::to_string(l);
                adapt::BoftState s;
                for (double v : need(prefix + "/strides").payload)
                    s.strides.push_back(static_cast<std::size_t>(v));
                for (std::size_t b = 0; b < s.strides.size(); ++b)
                    s.blocks.push_back(to_matrix(need(prefix + "/block" + std::to_string(b)),
                                                 prefix + "/block"));
                s.dim = s.blocks.empty() ? 0 : s.blocks[0].rows();
                model.boft.push_back(std::move(s));
            }
            break;
        case train::AdapterMode::urnn:
            for (std::size_t l = 0; l < model.w0.size(); ++l)
                model.urnn.push_back(to_cmatrix(need("urnn" + std::to_string(l) + "/u"),
                                                "urnn/u"));
            break;
        case train::AdapterMode::hybrid:
            for (std::size_t l = 0; l < model.w0.size(); ++l) {
                const std::string prefix = "hybrid" + std::to_string(l);
                fusion::HybridLayerState h;
                h.w = to_matrix(need(prefix + "/w"), prefix + "/w");
                h.lora = load_lora(prefix + "/lora");
                h.skew.q = to_matrix(need(prefix + "/q"), prefix + "/q");
                h.r_cache = to_matrix(need(prefix + "/r"), prefix + "/r");
                const Segment& m = need(prefix + "/meta");
                if (m.payload.size() != 6)
                    throw data_error("checkpoint: bad " + prefix + "/meta");
                h.skew.eta_boft = m.payload[0];
                h.trace.layer = static_cast<std::size_t>(m.payload[1]);
                h.trace.step = static_cast<std::size_t>(m.payload[2]);
                h.trace.g_lora = m.payload[3];
                h.trace.g_boft = m.payload[4];
                h.trace.lambda = m.payload[5];
                model.hybrid.push_back(std::move(h));
            }
            break;
    }

    // shape coherence
    for (std::size_t l = 0; l < model.w0.size(); ++l) {
        if (!num::is_square(model.w0[l]))
            throw data_error("checkpoint: segment base/w0." + std::to_string(l) +
                             " is not square");
        if (model.w0[l].rows() != model.embed.dim)
            throw data_error("checkpoint: segment base/w0." + std::to_string(l) +
                             " does not match embed dim");
    }
    if (model.head_w.cols() != model.embed.dim)
        throw data_error("checkpoint: segment head/w does not match embed dim");
    return model;
}

}  // namespace hybridft::cli
