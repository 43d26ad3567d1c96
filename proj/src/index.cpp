#include "seine/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

namespace seine {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) {
            throw IoError("cannot open index file for writing: " + path);
        }
    }

    void bytes(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) {
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        bytes(b, 8);
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            u8(static_cast<std::uint8_t>(v) | 0x80);
            v >>= 7;
        }
        u8(static_cast<std::uint8_t>(v));
    }
    void str(std::string_view s) {
        varint(s.size());
        bytes(s.data(), s.size());
    }
    void f32_span(std::span<const float> values) {
        for (float v : values) {
            f32(v);
        }
    }

    void close() {
        out_.flush();
        if (!out_) {
            throw IoError("failed writing index file: " + path_);
        }
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open index file: " + path);
        }
        in.seekg(0, std::ios::end);
        auto size = in.tellg();
        in.seekg(0, std::ios::beg);
        buffer_.resize(static_cast<std::size_t>(size));
        in.read(buffer_.data(), size);
        if (!in) {
            throw IoError("failed reading index file: " + path);
        }
    }

    void bytes(void* out, std::size_t n) {
        if (pos_ + n > buffer_.size()) {
            throw IoError("truncated index file: " + path_);
        }
        std::memcpy(out, buffer_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        for (;;) {
            std::uint8_t byte = u8();
            v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
            if ((byte & 0x80) == 0) {
                return v;
            }
            shift += 7;
            if (shift >= 64) {
                throw IoError("corrupt varint in index file: " + path_);
            }
        }
    }
    std::string str() {
        auto n = varint();
        if (n > remaining()) {
            throw IoError("truncated index file: " + path_);
        }
        std::string s(static_cast<std::size_t>(n), '\0');
        bytes(s.data(), s.size());
        return s;
    }
    std::size_t remaining() const { return buffer_.size() - pos_; }
    bool at_end() const { return pos_ == buffer_.size(); }

private:
    std::string path_;
    std::vector<char> buffer_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string BuildConfig::canonical_text() const {
    std::map<std::string, std::string> kv;
    kv["embeddings"] = embedding_signature;
    kv["gauss.sigma2"] = format_double(params.gauss_sigma2);
    kv["maxsp.softplus_only"] = params.maxsp_softplus_only ? "true" : "false";
    kv["params"] = std::to_string(fnv1a64(params.fingerprint()));
    kv["prune.bottom"] = format_double(prune_bottom);
    kv["prune.top"] = format_double(prune_top);
    kv["schema"] = schema.to_string();
    kv["segment.depth_cutoff_stddev"] = format_double(segmenter.depth_cutoff_stddev);
    kv["segment.mode"] = std::string(segment_mode_name(segmenter.mode));
    kv["segment.n_b"] = std::to_string(segmenter.n_b);
    kv["segment.window"] = std::to_string(segmenter.window);
    kv["sigma_index"] = std::to_string(sigma_index);
    std::string text;
    for (const auto& [key, value] : kv) {
        text += key;
        text += " = ";
        text += value;
        text += '\n';
    }
    return text;
}

std::span<const PostingEntry> SegmentIndex::lookup(std::string_view term) const {
    auto id = vocab.id_of(term);
    if (!id) {
        return {};
    }
    return postings[*id];
}

const DocInfo* SegmentIndex::find_doc(std::string_view doc_id) const {
    auto it = std::lower_bound(docs.begin(), docs.end(), doc_id,
                               [](const DocInfo& d, std::string_view id) { return d.id < id; });
    if (it == docs.end() || it->id != doc_id) {
        return nullptr;
    }
    return &*it;
}

std::size_t SegmentIndex::posting_count() const {
    std::size_t count = 0;
    for (const auto& list : postings) {
        count += list.size();
    }
    return count;
}

SegmentIndex build_index(std::span<const Document> docs, Vocabulary vocab,
                         const BuildConfig& config,
                         std::shared_ptr<const EmbeddingProvider> provider) {
    if (config.segmenter.n_b < 1) {
        throw ConfigError("segment.n_b must be >= 1");
    }
    InteractionEngine engine(config.schema, provider, config.params, &vocab);

    SegmentIndex index;
    index.header.n_b = config.segmenter.n_b;
    index.header.n_f = static_cast<std::uint32_t>(config.schema.n_f());
    index.header.schema = config.schema;
    index.header.sigma_index = config.sigma_index;
    index.header.doc_count = static_cast<std::uint32_t>(docs.size());
    index.header.avg_doc_len = vocab.avg_doc_len;
    index.header.log_floor = config.params.log_floor;
    index.header.build_config = config.canonical_text();
    index.header.build_config_hash = fnv1a64(index.header.build_config);
    index.header.vocab_size = static_cast<std::uint32_t>(vocab.size());

    // Canonical document order: ascending id. Posting lists inherit it, which
    // keeps doc deltas non-negative.
    std::vector<std::uint32_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return docs[a].id < docs[b].id;
    });
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (docs[order[i]].id == docs[order[i + 1]].id) {
            throw Error("duplicate document id \"" + docs[order[i]].id + "\"");
        }
    }

    auto n_b = config.segmenter.n_b;
    index.docs.resize(docs.size());
    std::vector<std::vector<SegmentContext>> contexts(docs.size());
    parallel_for(docs.size(), config.workers, [&](std::size_t ordinal) {
        const Document& doc = docs[order[ordinal]];
        auto segmented = segment_document(doc, config.segmenter);
        DocInfo info;
        info.id = doc.id;
        info.length = static_cast<std::uint32_t>(doc.tokens.size());
        info.segment_lengths.reserve(n_b);
        auto& ctx_list = contexts[ordinal];
        ctx_list.reserve(n_b);
        for (const Segment& segment : segmented.segments) {
            info.segment_lengths.push_back(static_cast<std::uint32_t>(segment.tokens.size()));
            ctx_list.push_back(engine.make_segment_context(segment));
        }
        index.docs[ordinal] = std::move(info);
    });

    // Candidate (term, doc) pairs from one containment pass: only documents
    // with tf(w, d) > sigma_index produce blocks.
    std::vector<std::vector<std::uint32_t>> term_docs(vocab.size());
    {
        StringMap<std::uint32_t> doc_tf;
        for (std::uint32_t ordinal = 0; ordinal < index.docs.size(); ++ordinal) {
            doc_tf.clear();
            for (const auto& ctx : contexts[ordinal]) {
                for (const auto& [token, positions] : ctx.positions) {
                    doc_tf[token] += static_cast<std::uint32_t>(positions.size());
                }
            }
            for (const auto& [token, count] : doc_tf) {
                if (count <= config.sigma_index) {
                    continue;
                }
                if (auto id = vocab.id_of(token)) {
                    term_docs[*id].push_back(ordinal);
                }
            }
        }
        for (auto& list : term_docs) {
            std::sort(list.begin(), list.end());
        }
    }

    index.postings.resize(vocab.size());
    auto block_values = static_cast<std::size_t>(n_b) * index.header.n_f;
    parallel_for(vocab.size(), config.workers, [&](std::size_t term_id) {
        const auto& doc_list = term_docs[term_id];
        if (doc_list.empty()) {
            return;
        }
        auto term_ctx = engine.make_term_context(vocab.terms[term_id]);
        auto& posting = index.postings[term_id];
        posting.reserve(doc_list.size());
        for (std::uint32_t ordinal : doc_list) {
            PostingEntry entry;
            entry.doc = ordinal;
            entry.block.resize(block_values);
            const auto& ctx_list = contexts[ordinal];
            for (std::uint32_t k = 0; k < n_b; ++k) {
                engine.evaluate(term_ctx, ctx_list[k],
                                std::span<float>(entry.block.data() +
                                                     static_cast<std::size_t>(k) * index.header.n_f,
                                                 index.header.n_f));
            }
            posting.push_back(std::move(entry));
        }
    });

    index.vocab = std::move(vocab);
    return index;
}

void SegmentIndex::save(const std::string& path) const {
    BinaryWriter out(path);
    out.bytes(kIndexMagic.data(), kIndexMagic.size());
    out.u32(header.vocab_size);
    out.u32(header.n_b);
    out.u32(header.n_f);
    for (Fn fn : header.schema.functions) {
        out.u8(static_cast<std::uint8_t>(fn));
    }
    out.u32(header.sigma_index);
    out.u32(header.doc_count);
    out.f64(header.avg_doc_len);
    out.f32(header.log_floor);
    out.u64(header.build_config_hash);
    out.str(header.build_config);

    out.u64(vocab.total_tokens);
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        out.str(vocab.terms[id]);
        out.u32(vocab.df[id]);
        out.u64(vocab.cf[id]);
    }

    for (const auto& doc : docs) {
        out.str(doc.id);
        out.u32(doc.length);
        for (std::uint32_t len : doc.segment_lengths) {
            out.u32(len);
        }
    }

    for (const auto& posting : postings) {
        out.varint(posting.size());
        std::uint32_t prev = 0;
        bool first = true;
        for (const auto& entry : posting) {
            out.varint(first ? entry.doc : entry.doc - prev);
            first = false;
            prev = entry.doc;
            out.f32_span(entry.block);
        }
    }
    out.close();
}

SegmentIndex SegmentIndex::load(const std::string& path) {
    BinaryReader in(path);
    std::array<unsigned char, 8> magic{};
    in.bytes(magic.data(), magic.size());
    if (magic != kIndexMagic) {
        throw IoError("not a SEINE index: " + path);
    }

    SegmentIndex index;
    index.header.vocab_size = in.u32();
    index.header.n_b = in.u32();
    index.header.n_f = in.u32();
    for (std::uint32_t i = 0; i < index.header.n_f; ++i) {
        auto raw = in.u8();
        if (raw >= kFnCount) {
            throw IoError("unknown interaction function id in index file: " + path);
        }
        index.header.schema.functions.push_back(static_cast<Fn>(raw));
    }
    index.header.sigma_index = in.u32();
    index.header.doc_count = in.u32();
    index.header.avg_doc_len = in.f64();
    index.header.log_floor = in.f32();
    index.header.build_config_hash = in.u64();
    index.header.build_config = in.str();
    if (fnv1a64(index.header.build_config) != index.header.build_config_hash) {
        throw IoError("index build-config hash mismatch (corrupt file?): " + path);
    }

    // Each vocabulary/document entry occupies at least one byte; a declared
    // count beyond the file size means corruption, not a large index.
    if (index.header.vocab_size > in.remaining() || index.header.doc_count > in.remaining()) {
        throw IoError("truncated index file: " + path);
    }

    index.vocab.collection_size = index.header.doc_count;
    index.vocab.avg_doc_len = index.header.avg_doc_len;
    index.vocab.total_tokens = in.u64();
    index.vocab.terms.resize(index.header.vocab_size);
    index.vocab.df.resize(index.header.vocab_size);
    index.vocab.cf.resize(index.header.vocab_size);
    index.vocab.idf.resize(index.header.vocab_size);
    for (std::uint32_t id = 0; id < index.header.vocab_size; ++id) {
        index.vocab.terms[id] = in.str();
        index.vocab.df[id] = in.u32();
        index.vocab.cf[id] = in.u64();
        index.vocab.idf[id] = std::log(static_cast<double>(index.vocab.collection_size) /
                                       (static_cast<double>(index.vocab.df[id]) + 1.0));
        index.vocab.term_ids.emplace(index.vocab.terms[id], id);
    }

    index.docs.resize(index.header.doc_count);
    for (auto& doc : index.docs) {
        doc.id = in.str();
        doc.length = in.u32();
        doc.segment_lengths.resize(index.header.n_b);
        for (auto& len : doc.segment_lengths) {
            len = in.u32();
        }
    }

    auto block_values = static_cast<std::size_t>(index.header.n_b) * index.header.n_f;
    index.postings.resize(index.header.vocab_size);
    for (auto& posting : index.postings) {
        auto count = in.varint();
        if (count > in.remaining()) {
            throw IoError("truncated index file: " + path);
        }
        posting.resize(static_cast<std::size_t>(count));
        std::uint32_t prev = 0;
        bool first = true;
        for (auto& entry : posting) {
            auto delta = in.varint();
            entry.doc = first ? static_cast<std::uint32_t>(delta)
                              : prev + static_cast<std::uint32_t>(delta);
            first = false;
            prev = entry.doc;
            if (entry.doc >= index.header.doc_count) {
                throw IoError("posting references unknown document ordinal: " + path);
            }
            entry.block.resize(block_values);
            for (auto& v : entry.block) {
                v = in.f32();
            }
        }
    }
    if (!in.at_end()) {
        throw IoError("trailing bytes after index payload: " + path);
    }
    return index;
}

QDAssembly assemble_qd(const SegmentIndex& index, std::span<const std::string> query_tokens,
                       const std::vector<std::uint32_t>* candidates) {
    QDAssembly assembly;
    assembly.n_b = index.header.n_b;
    assembly.n_f = index.header.n_f;
    for (const auto& token : query_tokens) {
        if (auto id = index.vocab.id_of(token)) {
            assembly.query_terms.push_back(token);
            assembly.term_ids.push_back(*id);
        }
    }

    std::vector<std::uint32_t> docs;
    if (candidates != nullptr) {
        docs = *candidates;
        std::sort(docs.begin(), docs.end());
        docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    } else {
        for (std::uint32_t id : assembly.term_ids) {
            for (const auto& entry : index.postings[id]) {
                docs.push_back(entry.doc);
            }
        }
        std::sort(docs.begin(), docs.end());
        docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    }

    auto block_values = assembly.block_values();
    // Block pattern for documents missing from a posting list: zeros, with
    // logp columns at the log floor.
    std::vector<float> absent_block(block_values, 0.0f);
    if (auto logp_col = index.header.schema.column(Fn::Logp)) {
        for (std::uint32_t k = 0; k < assembly.n_b; ++k) {
            absent_block[static_cast<std::size_t>(k) * assembly.n_f +
                         static_cast<std::size_t>(*logp_col)] = index.header.log_floor;
        }
    }

    std::vector<std::uint32_t> slot_of_doc(index.docs.size(), UINT32_MAX);
    assembly.matrices.resize(docs.size());
    for (std::uint32_t slot = 0; slot < docs.size(); ++slot) {
        if (docs[slot] >= index.docs.size()) {
            throw Error("assemble_qd: candidate ordinal out of range");
        }
        slot_of_doc[docs[slot]] = slot;
        auto& matrix = assembly.matrices[slot];
        matrix.doc = docs[slot];
        matrix.rows.resize(assembly.query_terms.size() * block_values);
        for (std::size_t row = 0; row < assembly.query_terms.size(); ++row) {
            std::copy(absent_block.begin(), absent_block.end(),
                      matrix.rows.begin() + static_cast<std::ptrdiff_t>(row * block_values));
        }
    }

    for (std::size_t row = 0; row < assembly.term_ids.size(); ++row) {
        for (const auto& entry : index.postings[assembly.term_ids[row]]) {
            auto slot = slot_of_doc[entry.doc];
            if (slot == UINT32_MAX) {
                continue;
            }
            std::copy(entry.block.begin(), entry.block.end(),
                      assembly.matrices[slot].rows.begin() +
                          static_cast<std::ptrdiff_t>(row * block_values));
        }
    }
    return assembly;
}

}  // namespace seine
