#pragma once

// Labeled text datasets, tokenization, and the frozen token-embedding store.
//
// Embedding exchange file ("QTPE", all integers little-endian):
//   magic "QTPE" | u32 version | u32 vocab_size | u32 dim
//   vocab_size x ( u16 token_byte_len | token UTF-8 bytes | dim x f32 )

#include <qtpnet/error.hpp>
#include <qtpnet/random.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qtpnet {

struct LabeledExample {
    std::string id;
    std::string text;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    int class_count = 0;
};

/// Parses JSONL: one {"id", "text", "label"} object per line. An optional
/// first line {"num_classes": C} declares the class count.
inline Dataset parse_dataset(std::istream& in) {
    Dataset ds;
    std::optional<int> declared;
    std::unordered_set<std::string> ids;
    std::string line;
    int line_no = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": malformed JSON");
        }
        if (!obj.is_object()) {
            fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": expected a JSON object");
        }
        if (ds.examples.empty() && !declared && obj.contains("num_classes") && !obj.contains("id")) {
            if (!obj["num_classes"].is_number_integer() || obj["num_classes"].get<int>() < 1) {
                fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": num_classes must be a positive integer");
            }
            declared = obj["num_classes"].get<int>();
            continue;
        }
        if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("text") || !obj["text"].is_string() ||
            !obj.contains("label") || !obj["label"].is_number_integer()) {
            fail(ErrorKind::Data, "line " + std::to_string(line_no) +
                                      ": expected fields id (string), text (string), label (integer)");
        }
        LabeledExample ex{obj["id"].get<std::string>(), obj["text"].get<std::string>(), obj["label"].get<int>()};
        if (ex.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            fail(ErrorKind::Data, "example '" + ex.id + "' has empty text");
        }
        if (ex.label < 0 || (declared && ex.label >= *declared)) {
            fail(ErrorKind::Data, "example '" + ex.id + "' has label " + std::to_string(ex.label) + " out of range");
        }
        if (!ids.insert(ex.id).second) {
            fail(ErrorKind::Data, "duplicate example id '" + ex.id + "'");
        }
        max_label = std::max(max_label, ex.label);
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) {
        fail(ErrorKind::Data, "no examples");
    }
    ds.class_count = declared.value_or(max_label + 1);
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Data, "cannot open dataset '" + path + "'");
    }
    return parse_dataset(in);
}

namespace detail {

/// Decodes one UTF-8 code point at `pos`; invalid bytes decode as themselves.
inline char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t i) {
        return pos + i < s.size() && (static_cast<unsigned char>(s[pos + i]) & 0xC0) == 0x80;
    };
    auto bits = [&](std::size_t i) { return static_cast<char32_t>(static_cast<unsigned char>(s[pos + i]) & 0x3F); };
    if (b0 >= 0xF0 && b0 < 0xF8 && cont(1) && cont(2) && cont(3)) {
        len = 4;
        return (static_cast<char32_t>(b0 & 0x07) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3);
    }
    if (b0 >= 0xE0 && b0 < 0xF0 && cont(1) && cont(2)) {
        len = 3;
        return (static_cast<char32_t>(b0 & 0x0F) << 12) | (bits(1) << 6) | bits(2);
    }
    if (b0 >= 0xC0 && b0 < 0xE0 && cont(1)) {
        len = 2;
        return (static_cast<char32_t>(b0 & 0x1F) << 6) | bits(1);
    }
    len = 1;
    return b0;
}

inline bool is_unicode_space(char32_t c) {
    switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return c >= 0x2000 && c <= 0x200A;
    }
}

inline bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

} // namespace detail

/// Lowercases ASCII, splits on Unicode whitespace, strips leading and
/// trailing ASCII punctuation, and drops empty tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        std::size_t b = 0;
        std::size_t e = current.size();
        while (b < e && detail::is_ascii_punct(current[b])) {
            ++b;
        }
        while (e > b && detail::is_ascii_punct(current[e - 1])) {
            --e;
        }
        if (e > b) {
            tokens.push_back(current.substr(b, e - b));
        }
        current.clear();
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t len = 1;
        const char32_t cp = detail::decode_utf8(text, pos, len);
        if ((len > 1 || cp < 0x80) && detail::is_unicode_space(cp)) {
            flush();
        } else if (len == 1) {
            const char c = text[pos];
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        } else {
            current.append(text.substr(pos, len));
        }
        pos += len;
    }
    flush();
    return tokens;
}

enum class OovPolicy { HashFallback, ZeroVector, Skip };

inline std::string_view to_string(OovPolicy p) {
    switch (p) {
    case OovPolicy::HashFallback: return "hash";
    case OovPolicy::ZeroVector: return "zero";
    case OovPolicy::Skip: return "skip";
    }
    return "hash";
}

inline OovPolicy parse_oov_policy(std::string_view name) {
    if (name == "hash") {
        return OovPolicy::HashFallback;
    }
    if (name == "zero") {
        return OovPolicy::ZeroVector;
    }
    if (name == "skip") {
        return OovPolicy::Skip;
    }
    fail(ErrorKind::Config, "unknown OOV policy '" + std::string(name) + "' (expected hash|zero|skip)");
}

/// Deterministic pseudo-random unit vector for a token: components uniform
/// in [-1, 1) from a generator seeded with the token's 64-bit FNV-1a hash,
/// then L2-normalized.
inline std::vector<double> hash_vector(std::string_view token, std::size_t dim) {
    Rng rng(stable_hash64(token));
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = 2.0 * uniform_unit(rng) - 1.0;
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm > 0.0) {
        for (auto& x : v) {
            x /= norm;
        }
    }
    return v;
}

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

class EmbeddingStore {
public:
    explicit EmbeddingStore(std::size_t dim, OovPolicy policy = OovPolicy::HashFallback)
        : dim_(dim), policy_(policy) {
        if (dim == 0) {
            fail(ErrorKind::Config, "embedding dimension must be >= 1");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return table_.size(); }
    OovPolicy policy() const noexcept { return policy_; }
    void set_policy(OovPolicy policy) noexcept { policy_ = policy; }

    void insert(std::string token, std::vector<float> values) {
        if (values.size() != dim_) {
            fail(ErrorKind::Shape, "embedding for '" + token + "' has " + std::to_string(values.size()) +
                                       " components, store dimension is " + std::to_string(dim_));
        }
        if (token.size() > 0xFFFF) {
            fail(ErrorKind::Data, "token longer than 65535 bytes");
        }
        if (!table_.emplace(token, std::move(values)).second) {
            fail(ErrorKind::Data, "duplicate token '" + token + "'");
        }
        order_.push_back(std::move(token));
    }

    bool contains(std::string_view token) const { return table_.find(std::string(token)) != table_.end(); }

    /// Stored vector, or the OOV fallback; nullopt means drop the token.
    std::optional<std::vector<double>> lookup(std::string_view token) const {
        if (auto it = table_.find(std::string(token)); it != table_.end()) {
            return std::vector<double>(it->second.begin(), it->second.end());
        }
        switch (policy_) {
        case OovPolicy::HashFallback: return hash_vector(token, dim_);
        case OovPolicy::ZeroVector: return std::vector<double>(dim_, 0.0);
        case OovPolicy::Skip: return std::nullopt;
        }
        return std::nullopt;
    }

    /// Tokens in insertion (file) order.
    const std::vector<std::string>& tokens() const noexcept { return order_; }

    static EmbeddingStore read(std::istream& in, OovPolicy policy = OovPolicy::HashFallback) {
        char magic[4];
        if (!in.read(magic, 4) || std::memcmp(magic, "QTPE", 4) != 0) {
            fail(ErrorKind::Data, "not an embedding file (bad magic)");
        }
        const auto version = read_le<std::uint32_t>(in);
        if (version != kEmbeddingFileVersion) {
            fail(ErrorKind::Data, "unsupported embedding file version " + std::to_string(version));
        }
        const auto vocab = read_le<std::uint32_t>(in);
        const auto dim = read_le<std::uint32_t>(in);
        if (dim == 0) {
            fail(ErrorKind::Data, "embedding file declares dimension 0");
        }
        EmbeddingStore store(dim, policy);
        for (std::uint32_t r = 0; r < vocab; ++r) {
            const auto len = read_le<std::uint16_t>(in);
            std::string token(len, '\0');
            if (len > 0 && !in.read(token.data(), len)) {
                fail(ErrorKind::Data, "truncated embedding file at record " + std::to_string(r));
            }
            std::vector<float> values(dim);
            for (auto& v : values) {
                v = std::bit_cast<float>(read_le<std::uint32_t>(in));
            }
            store.insert(std::move(token), std::move(values));
        }
        if (in.peek() != std::char_traits<char>::eof()) {
            fail(ErrorKind::Data, "trailing bytes after the last embedding record");
        }
        return store;
    }

    static EmbeddingStore load(const std::string& path, OovPolicy policy = OovPolicy::HashFallback) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fail(ErrorKind::Data, "cannot open embedding file '" + path + "'");
        }
        return read(in, policy);
    }

    void write(std::ostream& out) const {
        out.write("QTPE", 4);
        write_le(out, kEmbeddingFileVersion);
        write_le(out, static_cast<std::uint32_t>(order_.size()));
        write_le(out, static_cast<std::uint32_t>(dim_));
        for (const auto& token : order_) {
            write_le(out, static_cast<std::uint16_t>(token.size()));
            out.write(token.data(), static_cast<std::streamsize>(token.size()));
            for (float v : table_.at(token)) {
                write_le(out, std::bit_cast<std::uint32_t>(v));
            }
        }
    }

private:
    template <typename U>
    static U read_le(std::istream& in) {
        unsigned char buf[sizeof(U)];
        if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
            fail(ErrorKind::Data, "truncated embedding file");
        }
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
        }
        return v;
    }

    template <typename U>
    static void write_le(std::ostream& out, U v) {
        unsigned char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            buf[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        out.write(reinterpret_cast<const char*>(buf), sizeof(U));
    }

    std::size_t dim_;
    OovPolicy policy_;
    std::unordered_map<std::string, std::vector<float>> table_;
    std::vector<std::string> order_;
};

/// Vectors of the tokens that survive the store's OOV policy, in order.
inline std::vector<std::vector<double>> token_vectors(const EmbeddingStore& store,
                                                      std::span<const std::string> tokens) {
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (auto v = store.lookup(t)) {
            out.push_back(std::move(*v));
        }
    }
    return out;
}

/// Arithmetic mean of the surviving token vectors.
inline std::vector<double> sentence_embedding(const EmbeddingStore& store, std::span<const std::string> tokens) {
    const auto vectors = token_vectors(store, tokens);
    if (vectors.empty()) {
        fail(ErrorKind::DegenerateInput, "no tokens left after applying the OOV policy");
    }
    std::vector<double> mean(store.dim(), 0.0);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += v[i];
        }
    }
    for (auto& x : mean) {
        x /= static_cast<double>(vectors.size());
    }
    return mean;
}

} // namespace qtpnet
