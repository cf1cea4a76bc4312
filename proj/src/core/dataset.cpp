#include "ccest/dataset.hpp"

#include "ccest/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace ccest {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t load_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void store_u64_le(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        p[i] = static_cast<unsigned char>(v & 0xff);
        v >>= 8;
    }
}

void byteswap_floats(std::span<float> values) {
    for (float& f : values) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&f, &u, 4);
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    // A trailing blank line is tolerated; anything else blank is not.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

std::string default_item_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "item_%05zu", index);
    return buf;
}

std::vector<std::string> default_item_ids(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(default_item_id(i));
    return ids;
}

void Dataset::validate() const {
    const std::size_t n = item_ids.size();
    if (n == 0) throw ValidationError("dataset must contain at least one item");
    std::unordered_set<std::string_view> seen;
    seen.reserve(n);
    for (const auto& id : item_ids)
        if (!seen.insert(id).second) throw ValidationError("duplicate item id '" + id + "'");
    if (embeddings) {
        if (embeddings->rows() != n)
            throw ConsistencyError("embedding rows (" + std::to_string(embeddings->rows()) +
                                   ") differ from item count (" + std::to_string(n) + ")");
        if (embeddings->cols() == 0) throw ValidationError("embedding dimension must be at least 1");
        for (std::size_t r = 0; r < n; ++r)
            for (float x : embeddings->row(r))
                if (!std::isfinite(x)) throw ValidationError("non-finite embedding value in row " + std::to_string(r));
    }
    if (labels && labels->size() != n)
        throw ConsistencyError("label count (" + std::to_string(labels->size()) + ") differs from item count (" +
                               std::to_string(n) + ")");
    if (image_refs && image_refs->size() != n)
        throw ConsistencyError("image reference count differs from item count");
}

Dataset make_dataset(std::optional<MatrixF> embeddings, std::optional<std::vector<std::string>> labels,
                     std::size_t n_if_no_embeddings) {
    Dataset ds;
    const std::size_t n = embeddings ? embeddings->rows() : (labels ? labels->size() : n_if_no_embeddings);
    ds.item_ids = default_item_ids(n);
    ds.embeddings = std::move(embeddings);
    ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

MatrixF read_float_matrix(const std::filesystem::path& path, std::string_view magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    unsigned char header[24];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (in.gcount() != static_cast<std::streamsize>(sizeof header))
        throw FormatError(path.string() + ": truncated header");
    if (std::memcmp(header, magic.data(), 8) != 0) throw FormatError(path.string() + ": wrong magic bytes");
    const std::uint64_t rows = load_u64_le(header + 8);
    const std::uint64_t cols = load_u64_le(header + 16);
    if (rows == 0 || cols == 0) throw FormatError(path.string() + ": header declares an empty matrix");
    if (rows > (std::uint64_t{1} << 40) / cols) throw FormatError(path.string() + ": header size is implausible");

    const std::uint64_t expected = rows * cols * sizeof(float);
    in.seekg(0, std::ios::end);
    const auto payload = static_cast<std::uint64_t>(in.tellg()) - sizeof header;
    if (payload != expected)
        throw ConsistencyError(path.string() + ": header declares " + std::to_string(rows) + "x" +
                               std::to_string(cols) + " values but payload holds " +
                               std::to_string(payload / sizeof(float)) + " floats");
    in.seekg(sizeof header);
    std::vector<float> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected));
    if (!in) throw FormatError(path.string() + ": read failed");
    if constexpr (std::endian::native == std::endian::big) byteswap_floats(data);
    return MatrixF(rows, cols, std::move(data));
}

void write_float_matrix(const std::filesystem::path& path, std::string_view magic, const MatrixF& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    unsigned char header[24];
    std::memcpy(header, magic.data(), 8);
    store_u64_le(header + 8, m.rows());
    store_u64_le(header + 16, m.cols());
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    if constexpr (std::endian::native == std::endian::big) {
        std::vector<float> copy(m.data().begin(), m.data().end());
        byteswap_floats(copy);
        out.write(reinterpret_cast<const char*>(copy.data()), static_cast<std::streamsize>(copy.size() * 4));
    } else {
        out.write(reinterpret_cast<const char*>(m.data().data()), static_cast<std::streamsize>(m.data().size() * 4));
    }
    if (!out) throw ValidationError("write failed: " + path.string());
}

MatrixF read_embeddings(const std::filesystem::path& path) { return read_float_matrix(path, kEmbeddingMagic); }

void write_embeddings(const std::filesystem::path& path, const MatrixF& m) {
    write_float_matrix(path, kEmbeddingMagic, m);
}

std::vector<std::string> read_labels(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].empty()) throw FormatError(path.string() + ": empty label on line " + std::to_string(i + 1));
    return lines;
}

void write_labels(const std::filesystem::path& path, const std::vector<std::string>& labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& l : labels) out << l << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::vector<ManifestEntry> entries;
    const auto lines = read_lines(path);
    entries.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos || tab == 0)
            throw FormatError(path.string() + ": line " + std::to_string(i + 1) + " is not 'item_id<TAB>image_uri'");
        entries.push_back({lines[i].substr(0, tab), lines[i].substr(tab + 1)});
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& e : entries) out << e.item_id << '\t' << e.image_uri << '\n';
}

Dataset load_dataset(const std::filesystem::path& embeddings_path,
                     const std::optional<std::filesystem::path>& labels_path,
                     const std::optional<std::filesystem::path>& manifest_path) {
    Dataset ds;
    ds.embeddings = read_embeddings(embeddings_path);
    const std::size_t n = ds.embeddings->rows();
    if (labels_path) {
        ds.labels = read_labels(*labels_path);
        if (ds.labels->size() != n)
            throw ConsistencyError("labels file has " + std::to_string(ds.labels->size()) +
                                   " lines but embeddings have " + std::to_string(n) + " rows");
    }
    if (manifest_path) {
        auto entries = read_manifest(*manifest_path);
        if (entries.size() != n)
            throw ConsistencyError("manifest has " + std::to_string(entries.size()) +
                                   " lines but embeddings have " + std::to_string(n) + " rows");
        ds.image_refs.emplace();
        for (auto& e : entries) {
            ds.item_ids.push_back(std::move(e.item_id));
            ds.image_refs->push_back(std::move(e.image_uri));
        }
    } else {
        ds.item_ids = default_item_ids(n);
    }
    ds.validate();
    return ds;
}

}  // namespace ccest
