#pragma once

// zlib wrappers shared by the WARC reader and writer.

#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "wspam/warc.hpp"

namespace wspam::detail {

/// Source of decoded archive bytes.
class Decoder {
public:
    virtual ~Decoder() = default;

    /// Reads up to n decoded bytes; returns 0 only at a clean end of input.
    virtual std::size_t read(char* out, std::size_t n) = 0;

    /// Latest resume point at or before the given decoded offset.
    virtual ResumePoint resume_for(std::uint64_t decoded) const = 0;

    /// Resume points before this decoded offset will not be asked for again.
    virtual void forget_before(std::uint64_t decoded) { (void)decoded; }
};

class PlainDecoder final : public Decoder {
public:
    PlainDecoder(std::istream& in, std::string prefix, ResumePoint base);

    std::size_t read(char* out, std::size_t n) override;
    ResumePoint resume_for(std::uint64_t decoded) const override;

private:
    std::istream& in_;
    std::string prefix_;
    std::size_t prefix_pos_ = 0;
    ResumePoint base_;
};

/// Multi-member gzip inflater. Every member boundary becomes a resume point.
class GzipDecoder final : public Decoder {
public:
    GzipDecoder(std::istream& in, std::string prefix, ResumePoint base);
    ~GzipDecoder() override;

    GzipDecoder(const GzipDecoder&) = delete;
    GzipDecoder& operator=(const GzipDecoder&) = delete;

    std::size_t read(char* out, std::size_t n) override;
    ResumePoint resume_for(std::uint64_t decoded) const override;
    void forget_before(std::uint64_t decoded) override;

private:
    bool refill();
    std::uint64_t physical_position() const noexcept;

    std::istream& in_;
    z_stream zs_{};
    std::vector<unsigned char> input_;
    std::string prefix_;
    bool prefix_used_ = false;
    std::uint64_t physical_base_;
    std::uint64_t fed_ = 0;
    std::uint64_t decoded_;
    bool in_member_ = false;
    std::deque<ResumePoint> members_;
};

/// Gzip compressor writing one or more members to a stream.
class GzipEncoder {
public:
    explicit GzipEncoder(std::ostream& out);
    ~GzipEncoder();

    GzipEncoder(const GzipEncoder&) = delete;
    GzipEncoder& operator=(const GzipEncoder&) = delete;

    void write(std::string_view data);
    /// Ends the current member; the next write starts a new one.
    void finish_member();

private:
    void pump(int flush);

    std::ostream& out_;
    z_stream zs_{};
    bool open_ = false;
    std::vector<unsigned char> buffer_;
};

}  // namespace wspam::detail
