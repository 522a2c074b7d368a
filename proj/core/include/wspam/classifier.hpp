#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wspam/io.hpp"

namespace wspam {

/// Number of hashed feature buckets. A prime, so the rolling 4-gram value
/// spreads evenly under the modulus.
inline constexpr std::uint32_t kFeatureSpace = 1000081;

/// Bytes of a page that contribute features; the rest is ignored.
inline constexpr std::size_t kPagePrefix = 35000;

inline constexpr double kDefaultLearningRate = 0.002;

enum class Label : std::uint8_t { nonspam = 0, spam = 1 };

enum class ExampleSource : std::uint8_t { uk2006, britney, manual, other };

const char* to_string(Label label) noexcept;
const char* to_string(ExampleSource source) noexcept;
bool parse_label(std::string_view text, Label& out) noexcept;
bool parse_source(std::string_view text, ExampleSource& out) noexcept;

/// Distinct hashed byte 4-gram indices of a page, in order of first
/// occurrence. Every index is in [0, kFeatureSpace).
using FeatureSet = std::vector<std::uint32_t>;

/// Overlapping byte 4-grams of the first kPagePrefix bytes, hashed into
/// kFeatureSpace buckets and deduplicated. Pages shorter than four bytes
/// have no features.
FeatureSet feature_hash(ByteView page);

struct TrainingExample {
    std::string doc_id;
    std::string bytes;
    Label label = Label::nonspam;
    ExampleSource source = ExampleSource::other;
};

/// Weights of the linear spam classifier, one per hashed feature.
///
/// Weights are stored in single precision (the on-disk width); scores are
/// accumulated in double. Training mutates the vector in place; once
/// training is finished the object can be shared for concurrent scoring.
class WeightVector {
public:
    /// Zero weights. The learning rate is kept at the model file's f32
    /// precision so a saved model reloads bit-identical.
    explicit WeightVector(double learning_rate = kDefaultLearningRate);

    std::span<const float> weights() const noexcept { return weights_; }
    std::span<float> weights() noexcept { return weights_; }

    double learning_rate() const noexcept { return learning_rate_; }
    std::uint64_t trained_examples() const noexcept { return trained_examples_; }

    /// Log-odds spam estimate: sum of the weights of the page's features.
    double spamminess(ByteView page) const;

    /// One step of online logistic-regression gradient descent. The
    /// probability is computed from the pre-update weights.
    void train(ByteView page, Label label);

    friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
    friend WeightVector load_model(const std::filesystem::path&);
    friend WeightVector read_model(std::istream&);

    std::vector<float> weights_;
    float learning_rate_;
    std::uint64_t trained_examples_ = 0;
};

inline double spamminess(const WeightVector& w, ByteView page) { return w.spamminess(page); }

inline double spamminess(const WeightVector& w, std::string_view page) {
    return w.spamminess(as_bytes(page));
}

inline void train_update(WeightVector& w, const TrainingExample& ex) {
    w.train(as_bytes(ex.bytes), ex.label);
}

/// Single pass over the examples in order, starting from zero weights.
/// Throws InvalidArgument when there are no examples.
WeightVector train_pass(std::span<const TrainingExample> examples,
                        double learning_rate = kDefaultLearningRate);

/// Binary model format: "WSPM", u32 version, u32 feature count, f32
/// learning rate, u64 trained examples, then the weights as f32. All
/// little-endian.
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderSize = 24;

void write_model(const WeightVector& w, std::ostream& out);
WeightVector read_model(std::istream& in);

/// Atomic save (temp file + rename).
void save_model(const WeightVector& w, const std::filesystem::path& path);
WeightVector load_model(const std::filesystem::path& path);

}  // namespace wspam
