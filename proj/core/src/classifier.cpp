#include "wspam/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "wspam/error.hpp"

namespace wspam {

namespace {

// Bitset over the feature space. Only the words touched by one page are
// cleared afterwards, so reuse costs O(features), not O(kFeatureSpace).
class SeenFeatures {
public:
    SeenFeatures() : bits_((kFeatureSpace + 63) / 64, 0) {}

    bool insert(std::uint32_t h) noexcept {
        std::uint64_t& word = bits_[h >> 6];
        const std::uint64_t mask = std::uint64_t{1} << (h & 63);
        if (word & mask) return false;
        word |= mask;
        return true;
    }

    void clear(std::span<const std::uint32_t> touched) noexcept {
        for (std::uint32_t h : touched) bits_[h >> 6] = 0;
    }

private:
    std::vector<std::uint64_t> bits_;
};

SeenFeatures& seen_features() {
    thread_local SeenFeatures seen;
    return seen;
}

void collect_features(ByteView page, FeatureSet& out) {
    out.clear();
    const std::size_t n = std::min(page.size(), kPagePrefix);
    if (n < 4) return;
    SeenFeatures& seen = seen_features();
    std::uint32_t b = (std::uint32_t{page[0]} << 16) | (std::uint32_t{page[1]} << 8) | page[2];
    for (std::size_t i = 3; i < n; ++i) {
        b = (b << 8) | page[i];
        const std::uint32_t h = b % kFeatureSpace;
        if (seen.insert(h)) out.push_back(h);
    }
    seen.clear(out);
}

FeatureSet& scratch_features() {
    thread_local FeatureSet scratch;
    return scratch;
}

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
        static_assert(sizeof(T) == 4);
        bits = std::bit_cast<std::uint32_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <class T>
T get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{p[i]} << (8 * i);
    if constexpr (std::is_floating_point_v<T>) {
        return std::bit_cast<T>(static_cast<std::uint32_t>(bits));
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace

const char* to_string(Label label) noexcept {
    return label == Label::spam ? "spam" : "nonspam";
}

const char* to_string(ExampleSource source) noexcept {
    switch (source) {
        case ExampleSource::uk2006: return "uk2006";
        case ExampleSource::britney: return "britney";
        case ExampleSource::manual: return "manual";
        case ExampleSource::other: return "other";
    }
    return "other";
}

bool parse_label(std::string_view text, Label& out) noexcept {
    if (text == "spam") {
        out = Label::spam;
    } else if (text == "nonspam") {
        out = Label::nonspam;
    } else {
        return false;
    }
    return true;
}

bool parse_source(std::string_view text, ExampleSource& out) noexcept {
    if (text == "uk2006") out = ExampleSource::uk2006;
    else if (text == "britney") out = ExampleSource::britney;
    else if (text == "manual") out = ExampleSource::manual;
    else if (text == "other") out = ExampleSource::other;
    else return false;
    return true;
}

FeatureSet feature_hash(ByteView page) {
    FeatureSet out;
    collect_features(page, out);
    return out;
}

WeightVector::WeightVector(double learning_rate)
    : weights_(kFeatureSpace, 0.0f), learning_rate_(static_cast<float>(learning_rate)) {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate_)) {
        throw InvalidArgument("learning rate must be a positive finite number");
    }
}

double WeightVector::spamminess(ByteView page) const {
    FeatureSet& features = scratch_features();
    collect_features(page, features);
    double score = 0.0;
    for (std::uint32_t h : features) score += weights_[h];
    return score;
}

void WeightVector::train(ByteView page, Label label) {
    FeatureSet& features = scratch_features();
    collect_features(page, features);
    double score = 0.0;
    for (std::uint32_t h : features) score += weights_[h];
    const double p = 1.0 / (1.0 + std::exp(-score));
    const double target = label == Label::spam ? 1.0 : 0.0;
    const double step = static_cast<double>(learning_rate_) * (target - p);
    for (std::uint32_t h : features) {
        weights_[h] = static_cast<float>(static_cast<double>(weights_[h]) + step);
    }
    ++trained_examples_;
}

WeightVector train_pass(std::span<const TrainingExample> examples, double learning_rate) {
    if (examples.empty()) throw InvalidArgument("no training data: the example sequence is empty");
    WeightVector w(learning_rate);
    for (const TrainingExample& ex : examples) train_update(w, ex);
    return w;
}

void write_model(const WeightVector& w, std::ostream& out) {
    out.write("WSPM", 4);
    put_le<std::uint32_t>(out, kModelVersion);
    put_le<std::uint32_t>(out, kFeatureSpace);
    put_le<float>(out, static_cast<float>(w.learning_rate()));
    put_le<std::uint64_t>(out, w.trained_examples());
    if constexpr (std::endian::native == std::endian::little) {
        const auto weights = w.weights();
        out.write(reinterpret_cast<const char*>(weights.data()),
                  static_cast<std::streamsize>(weights.size_bytes()));
    } else {
        for (float x : w.weights()) put_le<float>(out, x);
    }
    if (!out) throw IoError("model write failed");
}

WeightVector read_model(std::istream& in) {
    unsigned char header[kModelHeaderSize];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    const auto got = static_cast<std::uint64_t>(in.gcount());
    if (got < 4 || std::memcmp(header, "WSPM", 4) != 0) {
        throw FormatError(got < 4 ? "truncated model header" : "bad model magic", got < 4 ? got : 0);
    }
    if (got < kModelHeaderSize) throw FormatError("truncated model header", got);
    const auto version = get_le<std::uint32_t>(header + 4);
    if (version != kModelVersion) {
        throw FormatError("unsupported model version " + std::to_string(version), 4);
    }
    const auto count = get_le<std::uint32_t>(header + 8);
    if (count != kFeatureSpace) {
        throw FormatError("model has " + std::to_string(count) + " weights, expected " +
                              std::to_string(kFeatureSpace),
                          8);
    }
    const auto rate = get_le<float>(header + 12);
    if (!(rate > 0.0f) || !std::isfinite(rate)) throw FormatError("invalid learning rate", 12);

    WeightVector w(rate);
    w.trained_examples_ = get_le<std::uint64_t>(header + 16);

    std::vector<unsigned char> raw(std::size_t{kFeatureSpace} * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    const auto payload = static_cast<std::uint64_t>(in.gcount());
    if (payload < raw.size()) throw FormatError("truncated model weights", kModelHeaderSize + payload);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("trailing bytes after model weights", kModelHeaderSize + raw.size());
    }
    for (std::size_t i = 0; i < kFeatureSpace; ++i) {
        const float x = get_le<float>(raw.data() + 4 * i);
        if (!std::isfinite(x)) throw FormatError("non-finite weight", kModelHeaderSize + 4 * i);
        w.weights_[i] = x;
    }
    return w;
}

void save_model(const WeightVector& w, const std::filesystem::path& path) {
    AtomicFile file(path);
    write_model(w, file.stream());
    file.commit();
}

WeightVector load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    return read_model(in);
}

}  // namespace wspam
