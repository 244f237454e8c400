#include "srmoe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "srmoe/config.hpp"
#include "srmoe/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace srmoe {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'M', 'O'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
void put_pod(std::vector<std::uint8_t>& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void take(void* dst, std::size_t n, const char* what) {
        if (n > left) throw DataError(std::string("checkpoint: truncated reading ") + what);
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
    }

    template <typename T>
    T pod(const char* what) {
        T v{};
        take(&v, sizeof(T), what);
        return v;
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_model(SrMoeModel& m) {
    std::vector<std::uint8_t> out;
    put_bytes(out, kMagic, 4);
    put_pod(out, kVersion);

    const std::string cfg = model_config_to_json(m.cfg);
    put_pod(out, static_cast<std::uint32_t>(cfg.size()));
    put_bytes(out, cfg.data(), cfg.size());

    std::uint32_t count = 0;
    m.visit_params([&count](Param&) { ++count; });
    put_pod(out, count);

    m.visit_params([&out](Param& p) {
        put_pod(out, static_cast<std::uint32_t>(p.name.size()));
        put_bytes(out, p.name.data(), p.name.size());
        put_pod(out, static_cast<std::int32_t>(p.value.rows));
        put_pod(out, static_cast<std::int32_t>(p.value.cols));
        put_bytes(out, p.value.data.data(), sizeof(double) * p.value.data.size());
    });
    return out;
}

SrMoeModel deserialize_model(const std::uint8_t* data, std::size_t len) {
    Reader r{data, len};
    char magic[4] = {};
    r.take(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic");
    const auto version = r.pod<std::uint32_t>("version");
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }

    const auto cfg_len = r.pod<std::uint32_t>("config length");
    std::string cfg_text(cfg_len, '\0');
    r.take(cfg_text.data(), cfg_len, "config");
    const ModelConfig cfg = model_config_from_json(cfg_text);

    SrMoeModel m = SrMoeModel::init(cfg, 0);

    const auto count = r.pod<std::uint32_t>("param count");
    std::uint32_t expected = 0;
    m.visit_params([&expected](Param&) { ++expected; });
    if (count != expected) {
        throw DataError("checkpoint: parameter count does not match the stored config");
    }

    m.visit_params([&r](Param& p) {
        const auto name_len = r.pod<std::uint32_t>("param name length");
        std::string name(name_len, '\0');
        r.take(name.data(), name_len, "param name");
        const auto rows = r.pod<std::int32_t>("param rows");
        const auto cols = r.pod<std::int32_t>("param cols");
        if (name != p.name || rows != p.value.rows || cols != p.value.cols) {
            throw DataError("checkpoint: parameter \"" + name +
                            "\" does not match the model built from the stored config");
        }
        r.take(p.value.data.data(), sizeof(double) * p.value.data.size(), "param values");
    });
    if (r.left != 0) throw DataError("checkpoint: trailing bytes after last parameter");
    return m;
}

SrMoeModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    return deserialize_model(bytes.data(), bytes.size());
}

void save_checkpoint(SrMoeModel& m, const std::string& path) {
    const std::vector<std::uint8_t> bytes = serialize_model(m);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("checkpoint: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("checkpoint: write failed: " + path);
}

SrMoeModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw DataError("checkpoint: cannot open: " + path);
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw DataError("checkpoint: read failed: " + path);
    return deserialize_model(bytes);
}

std::vector<Mat> snapshot_values(SrMoeModel& m) {
    std::vector<Mat> snap;
    m.visit_params([&snap](Param& p) { snap.push_back(p.value); });
    return snap;
}

void restore_values(SrMoeModel& m, const std::vector<Mat>& snapshot) {
    std::size_t i = 0;
    m.visit_params([&](Param& p) {
        if (i >= snapshot.size() || !snapshot[i].same_shape(p.value)) {
            throw std::invalid_argument("restore_values: snapshot does not match the model");
        }
        p.value = snapshot[i++];
    });
    if (i != snapshot.size()) {
        throw std::invalid_argument("restore_values: snapshot has extra matrices");
    }
}

}  // namespace srmoe
