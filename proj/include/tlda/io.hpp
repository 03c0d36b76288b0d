// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlda/classify.hpp"

namespace tlda {

/// Shortest round-trip decimal rendering; infinities and NaN spelled out.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

/// Binary tensor container: magic "TNSR", u32 version (1), u32 scalar code
/// (1 = real64), u32 order, then one u64 extent per mode and the entries as
/// little-endian doubles in storage order.
inline void write_tensor(const std::string& path, const DenseTensor& a) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    std::string header = "TNSR";
    detail::put_u32(header, 1);
    detail::put_u32(header, 1);
    detail::put_u32(header, static_cast<std::uint32_t>(a.order()));
    for (std::size_t d : a.dims()) detail::put_u64(header, d);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(a.data()),
                static_cast<std::streamsize>(a.size() * sizeof(double)));
    } else {
        std::string payload;
        payload.reserve(a.size() * 8);
        for (std::size_t i = 0; i < a.size(); ++i)
            detail::put_u64(payload, std::bit_cast<std::uint64_t>(a.data()[i]));
        f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    if (!f) throw FormatError("short write to '" + path + "'");
}

inline DenseTensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();

    if (n < 4 || std::memcmp(p, "TNSR", 4) != 0)
        throw FormatError("'" + path + "': bad magic at byte offset 0 (expected \"TNSR\")");
    if (n < 16)
        throw FormatError("'" + path + "': truncated header: " + std::to_string(n) +
                          " bytes, need at least 16");
    const std::uint32_t version = detail::get_u32(p + 4);
    if (version != 1)
        throw FormatError("'" + path + "': unsupported version " + std::to_string(version) +
                          " at byte offset 4");
    const std::uint32_t scalar = detail::get_u32(p + 8);
    if (scalar != 1)
        throw FormatError("'" + path + "': unsupported scalar code " + std::to_string(scalar) +
                          " at byte offset 8 (1 = real64)");
    const std::uint32_t order = detail::get_u32(p + 12);
    if (order < 2)
        throw FormatError("'" + path + "': tensor order " + std::to_string(order) +
                          " at byte offset 12 must be at least 2");
    const std::size_t payload_off = 16 + std::size_t(8) * order;
    if (n < payload_off)
        throw FormatError("'" + path + "': truncated dimension list: file has " +
                          std::to_string(n) + " bytes, dimensions end at byte " +
                          std::to_string(payload_off));

    std::vector<std::size_t> dims(order);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < order; ++k) {
        const std::uint64_t d = detail::get_u64(p + 16 + 8 * k);
        if (d > static_cast<std::uint64_t>(-1) / 8 / (count ? count : 1))
            throw FormatError("'" + path + "': dimensions overflow at byte offset " +
                              std::to_string(16 + 8 * k));
        dims[k] = static_cast<std::size_t>(d);
        count *= dims[k];
    }
    const std::size_t expected = payload_off + 8 * count;
    if (n < expected)
        throw FormatError("'" + path + "': truncated payload: expected " +
                          std::to_string(8 * count) + " bytes at byte offset " +
                          std::to_string(payload_off) + ", got " +
                          std::to_string(n - payload_off));
    if (n > expected)
        throw FormatError("'" + path + "': " + std::to_string(n - expected) +
                          " trailing bytes after the payload (file should be " +
                          std::to_string(expected) + " bytes)");

    std::vector<double> data(count);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(data.data(), p + payload_off, 8 * count);
    } else {
        for (std::size_t i = 0; i < count; ++i)
            data[i] = std::bit_cast<double>(detail::get_u64(p + payload_off + 8 * i));
    }
    return DenseTensor(std::move(dims), std::move(data));
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

}  // namespace detail

/// Label manifest: "index,label" lines, indices 0..l-1 in any order, an
/// optional "index,label" header. Every index must appear exactly once.
inline std::vector<std::string> read_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("cannot open '" + path + "' for reading");
    std::map<std::size_t, std::string> by_index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw ManifestError("'" + path + "' line " + std::to_string(lineno) +
                                ": expected 'index,label'");
        const std::string left = detail::trim(t.substr(0, comma));
        const std::string label = detail::trim(t.substr(comma + 1));
        std::size_t index = 0;
        const auto res = std::from_chars(left.data(), left.data() + left.size(), index);
        if (res.ec != std::errc() || res.ptr != left.data() + left.size()) {
            if (lineno == 1) continue;  // header row
            throw ManifestError("'" + path + "' line " + std::to_string(lineno) +
                                ": index '" + left + "' is not a non-negative integer");
        }
        if (label.empty())
            throw ManifestError("'" + path + "' line " + std::to_string(lineno) +
                                ": empty label");
        if (!by_index.emplace(index, label).second)
            throw ManifestError("'" + path + "' line " + std::to_string(lineno) +
                                ": duplicate index " + std::to_string(index));
    }
    std::vector<std::string> labels;
    labels.reserve(by_index.size());
    for (std::size_t i = 0; i < by_index.size(); ++i) {
        const auto it = by_index.find(i);
        if (it == by_index.end())
            throw ManifestError("'" + path + "': missing index " + std::to_string(i) +
                                " (manifest has " + std::to_string(by_index.size()) +
                                " entries)");
        labels.push_back(it->second);
    }
    if (labels.empty()) throw ManifestError("'" + path + "': no label entries");
    return labels;
}

inline void write_labels(const std::string& path, const std::vector<std::string>& labels) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ManifestError("cannot open '" + path + "' for writing");
    f << "index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        f << i << ',' << labels[i] << '\n';
    if (!f) throw ManifestError("short write to '" + path + "'");
}

namespace detail {

/// Box-Muller over the raw engine stream; avoids the unspecified library
/// normal_distribution so streams are identical everywhere.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}
    double operator()() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_ = true;
        return r * std::cos(a);
    }

private:
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 gen_;
    bool have_ = false;
    double spare_ = 0.0;
};

}  // namespace detail

/// Gaussian class blobs along a shared random unit direction: class i is
/// centered at sep * i * u with entrywise noise sigma. force_singular copies
/// feature row 0 over row 1 in every sample, making the within-class scatter
/// slices rank deficient.
struct SynthSpec {
    std::size_t classes = 2;
    std::size_t per_class = 10;
    std::vector<std::size_t> sample_dims;  // shape of one sample: d1[,d2,...]
    double sep = 1.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    bool force_singular = false;
};

inline LabeledTensorDataset synthesize(const SynthSpec& spec) {
    if (spec.classes < 1) throw ParameterError("synthesize: need at least one class");
    if (spec.per_class < 1) throw ParameterError("synthesize: need at least one sample per class");
    if (spec.sample_dims.empty()) throw ParameterError("synthesize: sample dims are empty");
    for (std::size_t d : spec.sample_dims)
        if (d < 1) throw ParameterError("synthesize: sample dims must be positive");
    if (!(spec.sigma >= 0.0)) throw ParameterError("synthesize: sigma must be non-negative");
    if (spec.force_singular && spec.sample_dims[0] < 2)
        throw ParameterError("synthesize: --force-singular needs mode-1 extent >= 2");

    const std::size_t d1 = spec.sample_dims[0];
    std::size_t sample_size = 1;
    for (std::size_t d : spec.sample_dims) sample_size *= d;
    const std::size_t l = spec.classes * spec.per_class;

    detail::GaussianRng rng(spec.seed);
    std::vector<double> direction(sample_size);
    double norm_sq = 0.0;
    for (auto& v : direction) {
        v = rng();
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) throw ParameterError("synthesize: degenerate random direction");
    for (auto& v : direction) v /= norm;

    std::vector<std::size_t> dims;
    dims.push_back(d1);
    dims.push_back(l);
    for (std::size_t k = 1; k < spec.sample_dims.size(); ++k) dims.push_back(spec.sample_dims[k]);
    DenseTensor data(dims);

    std::vector<std::string> labels(l);
    const std::size_t trailing = sample_size / d1;
    for (std::size_t i = 0; i < spec.classes; ++i)
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            const std::size_t j = i * spec.per_class + s;
            labels[j] = "c" + std::to_string(i);
            for (std::size_t e = 0; e < sample_size; ++e) {
                const double mean = spec.sep * static_cast<double>(i) * direction[e];
                const std::size_t p = e % d1, t = e / d1;
                data.data()[p + d1 * (j + l * t)] = mean + spec.sigma * rng();
            }
        }
    if (spec.force_singular)
        for (std::size_t t = 0; t < trailing; ++t)
            for (std::size_t j = 0; j < l; ++j)
                data.data()[1 + d1 * (j + l * t)] = data.data()[0 + d1 * (j + l * t)];
    return make_dataset(std::move(data), std::move(labels));
}

namespace detail {

inline nlohmann::json kappa_to_json(double v) {
    if (std::isinf(v)) return nlohmann::json();  // null encodes infinity
    return v;
}
inline double kappa_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

}  // namespace detail

/// A model persists as three files: PATH (subspace tensor), PATH.train
/// (projected training set) and PATH.meta (JSON sidecar with everything
/// else).
inline void save_model(const std::string& path, const DiscriminantModel& model) {
    write_tensor(path, model.u);
    write_tensor(path + ".train", model.train_projections);

    nlohmann::json meta;
    meta["format"] = "tlda-model";
    meta["version"] = 1;
    meta["method"] = to_string(model.method);
    meta["p"] = model.p;
    meta["transform"]["kind"] = to_string(model.spec.kind);
    meta["transform"]["modes"] = model.spec.transformed_modes;
    meta["transform"]["original_dims"] = model.spec.original_dims;
    meta["transform"]["padded_dims"] = model.spec.padded_dims;
    meta["class_ids"] = model.class_ids;
    meta["train_labels"] = model.train_labels;
    meta["kappa_threshold"] = model.kappa_threshold;
    meta["energy"] = model.energy;
    meta["lambda_floor_ratio"] = model.lambda_floor_ratio;
    nlohmann::json cond = nlohmann::json::array();
    for (const auto& c : model.conditioning) {
        nlohmann::json e;
        e["index"] = c.index;
        e["kappa_pre"] = detail::kappa_to_json(c.kappa_pre);
        e["kappa_post"] = detail::kappa_to_json(c.kappa_post);
        e["ill"] = c.ill;
        cond.push_back(e);
    }
    meta["conditioning"] = cond;

    std::ofstream f(path + ".meta", std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path + ".meta' for writing");
    f << meta.dump(2) << '\n';
    if (!f) throw FormatError("short write to '" + path + ".meta'");
}

inline DiscriminantModel load_model(const std::string& path) {
    DiscriminantModel model;
    model.u = read_tensor(path);
    model.train_projections = read_tensor(path + ".train");

    std::ifstream f(path + ".meta");
    if (!f) throw FormatError("cannot open '" + path + ".meta' for reading");
    nlohmann::json meta;
    try {
        f >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + ".meta': invalid JSON: " + e.what());
    }
    try {
        if (meta.at("format").get<std::string>() != "tlda-model")
            throw FormatError("'" + path + ".meta': not a model sidecar");
        if (meta.at("version").get<int>() != 1)
            throw FormatError("'" + path + ".meta': unsupported version");
        model.method = parse_method(meta.at("method").get<std::string>());
        model.p = meta.at("p").get<std::size_t>();
        const auto& tr = meta.at("transform");
        model.spec = make_spec(parse_transform_kind(tr.at("kind").get<std::string>()),
                               tr.at("original_dims").get<std::vector<std::size_t>>(),
                               tr.at("modes").get<std::vector<std::size_t>>());
        if (model.spec.padded_dims != tr.at("padded_dims").get<std::vector<std::size_t>>())
            throw FormatError("'" + path + ".meta': padded_dims disagree with the transform");
        model.class_ids = meta.at("class_ids").get<std::vector<std::string>>();
        model.train_labels = meta.at("train_labels").get<std::vector<std::string>>();
        model.kappa_threshold = meta.at("kappa_threshold").get<double>();
        model.energy = meta.at("energy").get<double>();
        model.lambda_floor_ratio = meta.at("lambda_floor_ratio").get<double>();
        for (const auto& e : meta.at("conditioning")) {
            ModelSliceConditioning c;
            c.index = e.at("index").get<std::vector<std::size_t>>();
            c.kappa_pre = detail::kappa_from_json(e.at("kappa_pre"));
            c.kappa_post = detail::kappa_from_json(e.at("kappa_post"));
            c.ill = e.at("ill").get<bool>();
            model.conditioning.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + ".meta': missing or mistyped field: " + e.what());
    }
    if (model.train_projections.dims()[1] != model.train_labels.size())
        throw FormatError("'" + path + "': training projections and labels disagree");
    return model;
}

/// Per-fold accuracies with their mean and population standard deviation.
inline std::string metrics_csv(const CvReport& report) {
    std::string out = "metric,fold,value\n";
    for (std::size_t i = 0; i < report.folds.size(); ++i)
        out += "fold_accuracy," + std::to_string(i + 1) + ',' +
               format_double(report.folds[i].accuracy) + '\n';
    out += "mean_accuracy,," + format_double(report.mean_accuracy) + '\n';
    out += "std_accuracy,," + format_double(report.std_accuracy) + '\n';
    return out;
}

inline std::string eval_csv(const EvalReport& report) {
    std::string out = "metric,true,predicted,value\n";
    out += "accuracy,,," + format_double(report.accuracy) + '\n';
    for (std::size_t i = 0; i < report.class_ids.size(); ++i)
        out += "class_accuracy," + report.class_ids[i] + ",," +
               format_double(report.per_class_accuracy[i]) + '\n';
    for (std::size_t i = 0; i < report.class_ids.size(); ++i)
        for (std::size_t k = 0; k < report.class_ids.size(); ++k)
            out += "confusion," + report.class_ids[i] + ',' + report.class_ids[k] + ',' +
                   std::to_string(report.confusion[i][k]) + '\n';
    return out;
}

inline std::string condition_csv(const std::vector<ModelSliceConditioning>& slices) {
    std::string out = "multi_index,kappa_pre,log10_kappa_pre,kappa_post,log10_kappa_post,ill\n";
    for (const auto& s : slices)
        out += detail::format_multi_index(s.index) + ',' + format_double(s.kappa_pre) + ',' +
               format_double(std::log10(s.kappa_pre)) + ',' + format_double(s.kappa_post) +
               ',' + format_double(std::log10(s.kappa_post)) + ',' +
               (s.ill ? "1" : "0") + '\n';
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw FormatError("short write to '" + path + "'");
}

}  // namespace tlda
