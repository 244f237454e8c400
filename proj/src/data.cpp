#include "srmoe/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "srmoe/errors.hpp"
#include "srmoe/rng.hpp"

namespace srmoe {

void DataConfig::validate() const {
    if (classes < 2) throw std::invalid_argument("data: classes must be >= 2");
    if (per_class < 10) throw std::invalid_argument("data: per_class must be >= 10");
    if (channels < 1 || height < 2 || width < 2) {
        throw std::invalid_argument("data: image dims too small");
    }
    if (noise < 0.0) throw std::invalid_argument("data: noise must be non-negative");
    if (novel_per_class < 0) throw std::invalid_argument("data: novel_per_class must be >= 0");
    const double s = train_ratio + val_ratio + test_ratio;
    if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0 || std::abs(s - 1.0) > 1e-9) {
        throw std::invalid_argument("data: split ratios must be non-negative and sum to 1");
    }
}

Mat class_template(const DataConfig& cfg, int cls) {
    if (cls < 0 || cls >= cfg.classes) throw std::invalid_argument("class_template: class out of range");
    const int H = cfg.height, W = cfg.width;
    const int family = cls % 4;
    const int variant = cls / 4;
    Mat plane(H, W);

    const double pi = 3.14159265358979323846;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double v = static_cast<double>(r) / (H - 1);
            const double u = static_cast<double>(c) / (W - 1);
            double val = 0.0;
            switch (family) {
                case 0: {  // oriented linear gradient
                    const double th = pi * (0.15 + 0.3 * variant);
                    const double g = std::cos(th) * u + std::sin(th) * v;
                    const double lo = std::min(0.0, std::cos(th)) + std::min(0.0, std::sin(th));
                    const double hi = std::max(0.0, std::cos(th)) + std::max(0.0, std::sin(th));
                    val = (g - lo) / (hi - lo);
                    break;
                }
                case 1: {  // off-center blob
                    const double cx = 0.35 + 0.3 * (variant % 2);
                    const double cy = 0.35 + 0.3 * ((variant / 2) % 2);
                    const double d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
                    val = std::exp(-d2 / 0.06);
                    break;
                }
                case 2: {  // concentric rings
                    const double f = 2.0 + variant;
                    const double rr = std::sqrt((u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5));
                    val = 0.5 + 0.5 * std::sin(2.0 * pi * f * rr);
                    break;
                }
                default: {  // oriented stripes
                    const double th = pi * (0.1 + 0.25 * variant);
                    const double f = 3.0 + variant;
                    val = 0.5 + 0.5 * std::sin(2.0 * pi * f * (u * std::cos(th) + v * std::sin(th)));
                    break;
                }
            }
            plane.at(r, c) = val;
        }
    }
    return plane;
}

Dataset generate_synthetic(const DataConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = cfg.classes * cfg.per_class;
    const int fd = cfg.channels * cfg.height * cfg.width;

    Dataset ds;
    ds.classes = cfg.classes;
    ds.channels = cfg.channels;
    ds.height = cfg.height;
    ds.width = cfg.width;
    ds.images = Mat(n, fd);
    ds.labels.resize(static_cast<std::size_t>(n));

    Rng rng(seed);
    const int hw = cfg.height * cfg.width;
    int row = 0;
    for (int cls = 0; cls < cfg.classes; ++cls) {
        const Mat tmpl = class_template(cfg, cls);
        for (int i = 0; i < cfg.per_class; ++i, ++row) {
            const double sign = (cfg.contrast_flip && rng.uniform() < 0.5) ? -1.0 : 1.0;
            double* out = ds.images.row(row);
            for (int ch = 0; ch < cfg.channels; ++ch) {
                for (int p = 0; p < hw; ++p) {
                    const double base = 0.5 + sign * (tmpl.data[static_cast<std::size_t>(p)] - 0.5);
                    out[ch * hw + p] = base + cfg.noise * rng.normal();
                }
            }
            ds.labels[static_cast<std::size_t>(row)] = cls;
        }
    }
    return ds;
}

Splits split(const Dataset& all, double train_ratio, double val_ratio, double test_ratio,
             int novel_per_class, std::uint64_t seed) {
    const double s = train_ratio + val_ratio + test_ratio;
    if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0 || std::abs(s - 1.0) > 1e-9) {
        throw std::invalid_argument("split: ratios must be non-negative and sum to 1");
    }
    if (novel_per_class < 0) throw std::invalid_argument("split: novel_per_class must be >= 0");

    // Gather per-class index lists in dataset order.
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(all.classes));
    for (int i = 0; i < all.size(); ++i) {
        by_class[static_cast<std::size_t>(all.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    std::vector<std::vector<int>> picked(4);  // train, val, test, novel row lists
    for (int cls = 0; cls < all.classes; ++cls) {
        std::vector<int>& idx = by_class[static_cast<std::size_t>(cls)];
        const int n = static_cast<int>(idx.size());
        if (n < novel_per_class + 3) {
            throw DataError("split: class " + std::to_string(cls) + " has only " +
                            std::to_string(n) + " samples, not enough for the requested split");
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
        rng.shuffle(idx);

        const int rest = n - novel_per_class;
        const int n_train = static_cast<int>(rest * train_ratio);
        const int n_val = static_cast<int>(rest * val_ratio);
        const int n_test = rest - n_train - n_val;
        if (n_train < 1 || n_test < 1) {
            throw DataError("split: class " + std::to_string(cls) +
                            " leaves an empty train or test share");
        }
        int pos = 0;
        for (int i = 0; i < novel_per_class; ++i) picked[3].push_back(idx[static_cast<std::size_t>(pos++)]);
        for (int i = 0; i < n_train; ++i) picked[0].push_back(idx[static_cast<std::size_t>(pos++)]);
        for (int i = 0; i < n_val; ++i) picked[1].push_back(idx[static_cast<std::size_t>(pos++)]);
        for (int i = 0; i < n_test; ++i) picked[2].push_back(idx[static_cast<std::size_t>(pos++)]);
    }

    Splits out;
    Dataset* dsts[4] = {&out.train, &out.val, &out.test, &out.novel};
    for (int s4 = 0; s4 < 4; ++s4) {
        Dataset& d = *dsts[s4];
        const std::vector<int>& rows = picked[static_cast<std::size_t>(s4)];
        d.classes = all.classes;
        d.channels = all.channels;
        d.height = all.height;
        d.width = all.width;
        d.images = Mat(static_cast<int>(rows.size()), all.feature_dim());
        d.labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::memcpy(d.images.row(static_cast<int>(i)), all.images.row(rows[i]),
                        sizeof(double) * static_cast<std::size_t>(all.feature_dim()));
            d.labels[i] = all.labels[static_cast<std::size_t>(rows[i])];
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'T', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const char* what) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw DataError(std::string("tensor file: truncated reading ") + what);
    return v;
}

}  // namespace

void save_tensor_file(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("tensor file: cannot open for writing: " + path);
    f.write(kMagic, 4);
    write_pod(f, kVersion);
    write_pod(f, static_cast<std::uint32_t>(ds.classes));
    write_pod(f, static_cast<std::uint32_t>(ds.channels));
    write_pod(f, static_cast<std::uint32_t>(ds.height));
    write_pod(f, static_cast<std::uint32_t>(ds.width));
    write_pod(f, static_cast<std::uint64_t>(ds.size()));
    if (ds.size() > 0) {
        f.write(reinterpret_cast<const char*>(ds.images.data.data()),
                static_cast<std::streamsize>(sizeof(double) * ds.images.data.size()));
        for (int y : ds.labels) write_pod(f, static_cast<std::int32_t>(y));
    }
    if (!f) throw DataError("tensor file: write failed: " + path);
}

Dataset load_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("tensor file: cannot open: " + path);
    char magic[4] = {};
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("tensor file: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(f, "version");
    if (version != kVersion) {
        throw DataError("tensor file: unsupported version " + std::to_string(version));
    }
    Dataset ds;
    ds.classes = static_cast<int>(read_pod<std::uint32_t>(f, "classes"));
    ds.channels = static_cast<int>(read_pod<std::uint32_t>(f, "channels"));
    ds.height = static_cast<int>(read_pod<std::uint32_t>(f, "height"));
    ds.width = static_cast<int>(read_pod<std::uint32_t>(f, "width"));
    const auto count = read_pod<std::uint64_t>(f, "count");
    if (ds.classes < 1 || ds.channels < 1 || ds.height < 1 || ds.width < 1) {
        throw DataError("tensor file: invalid header dims in " + path);
    }
    if (count > (1ull << 32)) throw DataError("tensor file: implausible sample count");

    ds.images = Mat(static_cast<int>(count), ds.feature_dim());
    if (count > 0) {
        f.read(reinterpret_cast<char*>(ds.images.data.data()),
               static_cast<std::streamsize>(sizeof(double) * ds.images.data.size()));
        if (!f) throw DataError("tensor file: truncated image payload in " + path);
        ds.labels.resize(static_cast<std::size_t>(count));
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto y = read_pod<std::int32_t>(f, "label");
            if (y < 0 || y >= ds.classes) throw DataError("tensor file: label out of range");
            ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(y);
        }
    }
    return ds;
}

}  // namespace srmoe
