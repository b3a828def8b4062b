// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#include "conerf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "conerf/error.hpp"

namespace conerf {

static_assert(std::endian::native == std::endian::little, "checkpoints are written in host byte order");

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'E', 'R', 'F', 'C', 'K'};

enum class BlobKind : std::uint8_t { kParameter = 0, kFirstMoment = 1, kSecondMoment = 2 };

class Writer {
public:
    template <typename T>
    void put(T value) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_string(const std::string& s) {
        put<std::uint64_t>(s.size());
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void put_blob(const std::string& name, BlobKind kind, const ad::Tensor& t) {
        put_string(name);
        put(static_cast<std::uint8_t>(kind));
        put(static_cast<std::uint32_t>(t.rank()));
        for (ad::Index d : t.shape()) put(static_cast<std::uint64_t>(d));
        const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
        bytes_.insert(bytes_.end(), p, p + t.size() * sizeof(double));
    }
    std::vector<std::uint8_t> finish() {
        put(fnv1a(bytes_.data(), bytes_.size()));
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    ad::Tensor get_tensor() {
        const auto rank = get<std::uint32_t>();
        if (rank > 8) throw DataError("corrupt checkpoint: tensor rank " + std::to_string(rank));
        ad::Shape shape;
        std::uint64_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const auto d = get<std::uint64_t>();
            if (d > (1ULL << 32)) throw DataError("corrupt checkpoint: tensor extent too large");
            shape.push_back(static_cast<ad::Index>(d));
            count *= d;
        }
        need(count * sizeof(double));
        std::vector<double> values(count);
        std::memcpy(values.data(), data_ + pos_, count * sizeof(double));
        pos_ += count * sizeof(double);
        return ad::Tensor(std::move(shape), std::move(values));
    }
    std::size_t position() const { return pos_; }

private:
    void need(std::uint64_t n) const {
        if (n > size_ - pos_) throw DataError("truncated checkpoint");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t config_fingerprint(const ModelConfig& model, const TrainConfig& train) {
    const std::string text = model_config_to_json(model) + '\n' + train_config_to_json(train);
    return fnv1a(text.data(), text.size());
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
    Writer w;
    for (char ch : kMagic) w.put(ch);
    w.put(kCheckpointVersion);
    w.put(static_cast<std::uint64_t>(c.step));
    w.put(config_fingerprint(c.model, c.train));
    w.put_string(model_config_to_json(c.model));
    w.put_string(train_config_to_json(c.train));
    w.put_string(nlohmann::json{{"attributes", c.attributes}, {"width", c.image_width}, {"height", c.image_height}}.dump());
    w.put(static_cast<std::uint64_t>(c.optimizer.step));
    const auto blobs = c.parameters.size() + c.optimizer.first_moment.size() + c.optimizer.second_moment.size();
    w.put(static_cast<std::uint32_t>(blobs));
    for (const auto& [name, t] : c.parameters) w.put_blob(name, BlobKind::kParameter, t);
    for (const auto& [name, t] : c.optimizer.first_moment) w.put_blob(name, BlobKind::kFirstMoment, t);
    for (const auto& [name, t] : c.optimizer.second_moment) w.put_blob(name, BlobKind::kSecondMoment, t);
    return w.finish();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
        throw DataError("truncated checkpoint");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw DataError("not a checkpoint: bad magic");
    Reader header(bytes.data() + sizeof(kMagic), bytes.size() - sizeof(kMagic));
    const auto version = header.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, sizeof stored);
    if (fnv1a(bytes.data(), body) != stored) throw DataError("corrupt checkpoint: checksum mismatch");

    Reader r(bytes.data(), body);
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<char>();
    r.get<std::uint32_t>();
    Checkpoint c;
    c.step = static_cast<std::int64_t>(r.get<std::uint64_t>());
    const auto fingerprint = r.get<std::uint64_t>();
    c.model = model_config_from_json(r.get_string());
    c.train = train_config_from_json(r.get_string());
    if (config_fingerprint(c.model, c.train) != fingerprint) {
        throw DataError("corrupt checkpoint: configuration fingerprint mismatch");
    }
    try {
        const auto info = nlohmann::json::parse(r.get_string());
        c.attributes = info.at("attributes").get<std::vector<std::string>>();
        c.image_width = info.at("width").get<int>();
        c.image_height = info.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt checkpoint: ") + e.what());
    }
    if (static_cast<int>(c.attributes.size()) != c.model.num_attributes) {
        throw DataError("corrupt checkpoint: attribute names do not match the model");
    }
    c.optimizer.step = static_cast<std::int64_t>(r.get<std::uint64_t>());
    const auto blobs = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < blobs; ++i) {
        std::string name = r.get_string();
        const auto kind = r.get<std::uint8_t>();
        ad::Tensor t = r.get_tensor();
        switch (kind) {
            case static_cast<std::uint8_t>(BlobKind::kParameter):
                c.parameters.emplace(std::move(name), std::move(t));
                break;
            case static_cast<std::uint8_t>(BlobKind::kFirstMoment):
                c.optimizer.first_moment.emplace(std::move(name), std::move(t));
                break;
            case static_cast<std::uint8_t>(BlobKind::kSecondMoment):
                c.optimizer.second_moment.emplace(std::move(name), std::move(t));
                break;
            default:
                throw DataError("corrupt checkpoint: unknown blob kind " + std::to_string(kind));
        }
    }
    if (r.position() != body) throw DataError("corrupt checkpoint: trailing bytes");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(checkpoint);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file: " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace conerf
