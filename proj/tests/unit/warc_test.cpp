#include <gtest/gtest.h>
#include <zlib.h>

#include <fstream>
#include <random>
#include <sstream>

#include "synthetic.hpp"
#include "test_util.hpp"
#include "wspam/error.hpp"
#include "wspam/warc.hpp"

namespace wspam {
namespace {

using testing::ScratchDir;

std::vector<WarcDocument> synthetic_docs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    testing::TextSampler text(2000, seed);
    std::vector<WarcDocument> docs;
    for (std::size_t i = 0; i < n; ++i) {
        docs.push_back(i % 4 == 0 ? testing::spam_document(rng, text, i) : testing::ham_document(rng, text, i));
    }
    return docs;
}

// Decompresses with zlib's own gz reader, which concatenates members.
std::string gunzip_file(const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    EXPECT_NE(f, nullptr);
    std::string out;
    char buf[1 << 15];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    gzclose(f);
    return out;
}

std::vector<PageRecord> read_all(const std::string& archive, CorpusStats* stats = nullptr) {
    std::istringstream in(archive);
    WarcReader reader(in, "mem.warc");
    std::vector<PageRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    if (stats) *stats = reader.stats();
    return out;
}

TEST(WarcReader, EmptyInput) {
    CorpusStats stats;
    EXPECT_TRUE(read_all("", &stats).empty());
    EXPECT_EQ(stats.pages, 0u);
    EXPECT_EQ(stats.malformed_records, 0u);
}

TEST(WarcReader, WarcinfoPlusResponseGivesOnePage) {
    std::ostringstream out;
    const std::vector<WarcDocument> docs{{"doc-1", "http://example.com/", testing::http_response("<p>hi</p>")}};
    write_warc(docs, out);
    CorpusStats stats;
    const auto recs = read_all(out.str(), &stats);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].doc_id, "doc-1");
    EXPECT_EQ(recs[0].target_uri, "http://example.com/");
    EXPECT_EQ(recs[0].block(), docs[0].block);
    EXPECT_EQ(recs[0].bytes, render_response_record(docs[0]));
    EXPECT_EQ(stats.pages, 1u);
    EXPECT_EQ(stats.skipped_records, 1u);
    EXPECT_EQ(stats.bytes_read, out.str().size());
}

TEST(WarcReader, ClueWebStyleVersion018) {
    const std::string block = "HTTP/1.1 200 OK\r\nContent-Type: text/html\r\n\r\n<html>spam spam</html>";
    std::string archive =
        "WARC/0.18\r\nWARC-Type: warcinfo\r\nWARC-Date: 2009-03-65T08:43:19-0800\r\nContent-Length: 0\r\n\r\n\r\n\r\n";
    archive += "WARC/0.18\r\nwarc-type: Response\r\nWARC-Target-URI: http://00000-nrt-realestate.homepagestartup.com/\r\n"
               "warc-trec-id: clueweb09-en0000-00-00000\r\nContent-Type: application/http;msgtype=response\r\n"
               "CONTENT-LENGTH: " +
               std::to_string(block.size()) + "\r\n\r\n" + block + "\r\n\r\n";
    const auto recs = read_all(archive);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].doc_id, "clueweb09-en0000-00-00000");
    EXPECT_EQ(recs[0].block(), block);
    EXPECT_TRUE(recs[0].bytes.starts_with("WARC/0.18\r\nwarc-type: Response"));
}

TEST(WarcReader, SynthesizesPositionalIds) {
    const std::string block = "HTTP/1.1 200 OK\r\n\r\nbody";
    const std::string rec =
        "WARC/1.0\r\nWARC-Type: response\r\nContent-Length: " + std::to_string(block.size()) + "\r\n\r\n" + block;
    const std::string archive = rec + "\r\n\r\n" + rec + "\r\n\r\n";
    const auto recs = read_all(archive);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].doc_id, "mem.warc:0");
    EXPECT_EQ(recs[1].doc_id, "mem.warc:" + std::to_string(rec.size() + 4));
    EXPECT_EQ(recs[1].offset, rec.size() + 4);
}

TEST(WarcReader, ContinuationLinesAndMissingTrailer) {
    const std::string block = "payload";
    const std::string archive = "WARC/1.0\r\nWARC-Type: response\r\nWARC-TREC-ID: a\r\n  b\r\nContent-Length: " +
                                std::to_string(block.size()) + "\r\n\r\n" + block;
    const auto recs = read_all(archive);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].doc_id, "a b");
}

TEST(WarcReader, MalformedRecordsAreSkippedAndCounted) {
    std::ostringstream good;
    write_warc(synthetic_docs(3, 1), good, {WarcCompression::none, "1.0", false});
    const std::string block = "xyz";
    std::string archive = "this is junk\r\nmore junk\r\n\r\n";
    archive += "WARC/1.0\r\nWARC-Type: response\r\nContent-Length: banana\r\n\r\n" + block + "\r\n\r\n";
    archive += "WARC/1.0\r\nWARC-Type: response\r\n\r\n";  // no length
    archive += good.str();
    archive += "WARC/1.0\r\nWARC-Type: response\r\nWARC-TREC-ID: cut\r\nContent-Length: 500\r\n\r\nshort";
    CorpusStats stats;
    const auto recs = read_all(archive, &stats);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].doc_id, synthetic_docs(3, 1)[0].doc_id);
    EXPECT_EQ(stats.pages, 3u);
    EXPECT_EQ(stats.malformed_records, 4u);
}

TEST(WarcReader, OversizeRecordsAreSkipped) {
    std::ostringstream out;
    auto docs = synthetic_docs(3, 2);
    docs[1].block = std::string(100000, 'x');
    write_warc(docs, out);
    std::istringstream in(out.str());
    WarcReader reader(in, "mem", WarcReaderOptions{50000});
    std::vector<std::string> ids;
    while (auto r = reader.next()) ids.push_back(r->doc_id);
    EXPECT_EQ(ids, (std::vector<std::string>{docs[0].doc_id, docs[2].doc_id}));
    EXPECT_EQ(reader.stats().malformed_records, 1u);
}

TEST(WarcWriter, RoundTripOneRecord) {
    const std::vector<WarcDocument> docs{{"only", "", "HTTP/1.0 200 OK\r\n\r\n\x01\x02\x03 binary \0 body"}};
    std::ostringstream out;
    write_warc(docs, out);
    const auto recs = read_all(out.str());
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].doc_id, "only");
    EXPECT_EQ(recs[0].block(), docs[0].block);
}

TEST(WarcWriter, RoundTripThousandRandomRecords) {
    std::mt19937_64 rng(99);
    std::vector<WarcDocument> docs;
    for (int i = 0; i < 1000; ++i) {
        docs.push_back({"id-" + std::to_string(i), "http://h" + std::to_string(i) + ".example/",
                        testing::random_bytes(rng, rng() % 4000)});
    }
    for (const auto& version : {"1.0", "0.18"}) {
        std::ostringstream out;
        write_warc(docs, out, {WarcCompression::none, version, true});
        const auto recs = read_all(out.str());
        ASSERT_EQ(recs.size(), docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            ASSERT_EQ(recs[i].doc_id, docs[i].doc_id);
            ASSERT_EQ(recs[i].block(), docs[i].block);
            ASSERT_EQ(recs[i].bytes, render_response_record(docs[i], version));
        }
    }
}

TEST(WarcWriter, RejectsDuplicateIds) {
    const std::vector<WarcDocument> docs{{"x", "", "a"}, {"y", "", "b"}, {"x", "", "c"}};
    std::ostringstream out;
    EXPECT_THROW(write_warc(docs, out), InvalidArgument);
    const std::vector<WarcDocument> bad{{"has\nnewline", "", "a"}};
    EXPECT_THROW(write_warc(bad, out), InvalidArgument);
}

class GzipArchives : public ::testing::TestWithParam<WarcCompression> {};

TEST_P(GzipArchives, HundredPagesMatchPlainBytes) {
    ScratchDir dir;
    const auto docs = synthetic_docs(100, 5);
    write_warc(docs, dir / "plain.warc");
    write_warc(docs, dir / "packed.warc.gz", {GetParam(), "1.0", true});

    // Independent check of the compressed file.
    EXPECT_EQ(gunzip_file(dir / "packed.warc.gz"), testing::read_text(dir / "plain.warc"));

    CorpusStats plain_stats;
    CorpusStats packed_stats;
    const auto plain = read_warc(dir / "plain.warc", &plain_stats);
    const auto packed = read_warc(dir / "packed.warc.gz", &packed_stats);
    ASSERT_EQ(packed.size(), 100u);
    for (std::size_t i = 0; i < packed.size(); ++i) {
        EXPECT_EQ(packed[i].doc_id, docs[i].doc_id);
        EXPECT_EQ(packed[i].bytes, plain[i].bytes);
        EXPECT_EQ(packed[i].offset, plain[i].offset);
    }
    EXPECT_EQ(packed_stats.bytes_read, plain_stats.bytes_read);
    EXPECT_EQ(packed_stats.skipped_records, 1u);
}

TEST_P(GzipArchives, ResumePointsRefetchRecords) {
    ScratchDir dir;
    const auto docs = synthetic_docs(40, 6);
    const auto path = dir / "a.warc.gz";
    write_warc(docs, path, {GetParam(), "1.0", true});
    const auto recs = read_warc(path);
    ASSERT_EQ(recs.size(), docs.size());
    for (std::size_t i : {std::size_t{0}, std::size_t{7}, std::size_t{39}}) {
        const PageRecord again = fetch_record(path, recs[i].resume, recs[i].doc_id);
        EXPECT_EQ(again.bytes, recs[i].bytes);
        EXPECT_EQ(again.offset, recs[i].offset);
        // A whole-file archive has one member, so the reopened reader
        // starts at its first record and reaches this one by scanning.
        WarcReader reader(path, recs[i].resume);
        std::size_t scanned = 0;
        std::optional<PageRecord> hit;
        while ((hit = reader.next()) && hit->doc_id != recs[i].doc_id) ++scanned;
        ASSERT_TRUE(hit);
        EXPECT_EQ(hit->offset, recs[i].offset);
        EXPECT_EQ(scanned, GetParam() == WarcCompression::per_record ? 0u : i);
    }
    EXPECT_THROW(fetch_record(path, recs[3].resume, "no-such-doc"), DataError);
}

INSTANTIATE_TEST_SUITE_P(Compression, GzipArchives,
                         ::testing::Values(WarcCompression::per_record, WarcCompression::whole_file),
                         [](const auto& info) {
                             return std::string(info.param == WarcCompression::per_record ? "PerRecord" : "WholeFile");
                         });

TEST(WarcReader, PlainResumePoints) {
    ScratchDir dir;
    const auto docs = synthetic_docs(10, 8);
    write_warc(docs, dir / "p.warc");
    const auto recs = read_warc(dir / "p.warc");
    for (const auto& r : recs) {
        EXPECT_EQ(r.resume.physical, r.offset);
        EXPECT_EQ(fetch_record(dir / "p.warc", r.resume, r.doc_id).bytes, r.bytes);
    }
}

TEST(WarcReader, CorruptGzipThrowsWithOffset) {
    ScratchDir dir;
    const auto path = dir / "c.warc.gz";
    write_warc(synthetic_docs(20, 9), path, {WarcCompression::per_record, "1.0", true});
    std::string bytes = testing::read_text(path);
    const std::size_t at = bytes.size() / 2;
    for (std::size_t i = at; i < at + 64; ++i) bytes[i] = static_cast<char>(bytes[i] ^ 0x5a);
    testing::write_text(path, bytes);
    try {
        read_warc(path);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_GT(e.offset(), 0u);
        EXPECT_LE(e.offset(), bytes.size());
    }
}

TEST(WarcReader, TruncatedGzipThrows) {
    ScratchDir dir;
    const auto path = dir / "t.warc.gz";
    write_warc(synthetic_docs(5, 10), path, {WarcCompression::whole_file, "1.0", true});
    const std::string bytes = testing::read_text(path);
    testing::write_text(path, bytes.substr(0, bytes.size() - 100));
    EXPECT_THROW(read_warc(path), FormatError);
}

TEST(WarcReader, MissingFileIsIoError) {
    EXPECT_THROW(WarcReader("/nonexistent/dir/x.warc"), IoError);
}

TEST(CorpusStats, Accumulate) {
    CorpusStats a{1, 10, 2, 3};
    a += CorpusStats{4, 5, 6, 7};
    EXPECT_EQ(a.pages, 5u);
    EXPECT_EQ(a.bytes_read, 15u);
    EXPECT_EQ(a.malformed_records, 8u);
    EXPECT_EQ(a.skipped_records, 10u);
}

}  // namespace
}  // namespace wspam
