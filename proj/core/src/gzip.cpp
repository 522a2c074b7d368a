#include "gzip.hpp"

#include <algorithm>
#include <cstring>

#include "wspam/error.hpp"

namespace wspam::detail {

PlainDecoder::PlainDecoder(std::istream& in, std::string prefix, ResumePoint base)
    : in_(in), prefix_(std::move(prefix)), base_(base) {}

std::size_t PlainDecoder::read(char* out, std::size_t n) {
    std::size_t got = 0;
    if (prefix_pos_ < prefix_.size()) {
        got = std::min(n, prefix_.size() - prefix_pos_);
        std::memcpy(out, prefix_.data() + prefix_pos_, got);
        prefix_pos_ += got;
    }
    if (got < n && in_) {
        in_.read(out + got, static_cast<std::streamsize>(n - got));
        got += static_cast<std::size_t>(in_.gcount());
    }
    return got;
}

ResumePoint PlainDecoder::resume_for(std::uint64_t decoded) const {
    return {base_.physical + (decoded - base_.decoded), decoded};
}

GzipDecoder::GzipDecoder(std::istream& in, std::string prefix, ResumePoint base)
    : in_(in), input_(1 << 16), prefix_(std::move(prefix)), physical_base_(base.physical), decoded_(base.decoded) {
    if (inflateInit2(&zs_, 15 + 16) != Z_OK) throw Error("zlib inflateInit2 failed");
    members_.push_back(base);
}

GzipDecoder::~GzipDecoder() { inflateEnd(&zs_); }

std::uint64_t GzipDecoder::physical_position() const noexcept {
    return physical_base_ + fed_ - zs_.avail_in;
}

bool GzipDecoder::refill() {
    std::size_t got = 0;
    if (!prefix_used_) {
        prefix_used_ = true;
        got = std::min(prefix_.size(), input_.size());
        std::memcpy(input_.data(), prefix_.data(), got);
    }
    if (got < input_.size() && in_) {
        in_.read(reinterpret_cast<char*>(input_.data() + got), static_cast<std::streamsize>(input_.size() - got));
        got += static_cast<std::size_t>(in_.gcount());
    }
    fed_ += got;
    zs_.next_in = input_.data();
    zs_.avail_in = static_cast<uInt>(got);
    return got > 0;
}

std::size_t GzipDecoder::read(char* out, std::size_t n) {
    zs_.next_out = reinterpret_cast<Bytef*>(out);
    zs_.avail_out = static_cast<uInt>(n);
    std::uint64_t produced_before_end = 0;
    while (zs_.avail_out == n) {
        if (zs_.avail_in == 0 && !refill()) {
            if (in_member_) throw FormatError("truncated gzip member", physical_position());
            return 0;
        }
        if (!in_member_) {
            if (zs_.next_in[0] != 0x1f) throw FormatError("garbage between gzip members", physical_position());
            in_member_ = true;
        }
        const int rc = inflate(&zs_, Z_NO_FLUSH);
        if (rc == Z_STREAM_END) {
            in_member_ = false;
            produced_before_end = n - zs_.avail_out;
            members_.push_back({physical_position(), decoded_ + produced_before_end});
            inflateReset(&zs_);
        } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
            throw FormatError(std::string("corrupt gzip data: ") + (zs_.msg ? zs_.msg : "inflate error"),
                              physical_position());
        }
    }
    const std::size_t produced = n - zs_.avail_out;
    decoded_ += produced;
    return produced;
}

ResumePoint GzipDecoder::resume_for(std::uint64_t decoded) const {
    ResumePoint best = members_.front();
    for (const ResumePoint& m : members_) {
        if (m.decoded > decoded) break;
        best = m;
    }
    return best;
}

void GzipDecoder::forget_before(std::uint64_t decoded) {
    while (members_.size() > 1 && members_[1].decoded <= decoded) members_.pop_front();
}

GzipEncoder::GzipEncoder(std::ostream& out) : out_(out), buffer_(1 << 16) {}

GzipEncoder::~GzipEncoder() {
    if (open_) deflateEnd(&zs_);
}

void GzipEncoder::pump(int flush) {
    for (;;) {
        zs_.next_out = buffer_.data();
        zs_.avail_out = static_cast<uInt>(buffer_.size());
        const int rc = deflate(&zs_, flush);
        if (rc == Z_STREAM_ERROR) throw Error("zlib deflate failed");
        out_.write(reinterpret_cast<const char*>(buffer_.data()),
                   static_cast<std::streamsize>(buffer_.size() - zs_.avail_out));
        if (flush == Z_FINISH ? rc == Z_STREAM_END : (zs_.avail_out != 0 && zs_.avail_in == 0)) break;
    }
}

void GzipEncoder::write(std::string_view data) {
    if (!open_) {
        zs_ = z_stream{};
        if (deflateInit2(&zs_, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
            throw Error("zlib deflateInit2 failed");
        }
        open_ = true;
    }
    zs_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs_.avail_in = static_cast<uInt>(data.size());
    pump(Z_NO_FLUSH);
}

void GzipEncoder::finish_member() {
    if (!open_) return;
    zs_.next_in = nullptr;
    zs_.avail_in = 0;
    pump(Z_FINISH);
    deflateEnd(&zs_);
    open_ = false;
}

}  // namespace wspam::detail
