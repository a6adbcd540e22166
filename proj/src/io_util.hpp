#pragma once

// Little-endian byte packing and whole-file I/O shared by the binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>

#include "claimclust/error.hpp"

namespace claimclust::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

class ByteWriter {
  public:
    template <typename T>
    void write(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        write_bytes(&value, sizeof(T));
    }
    void write_bytes(const void* data, std::size_t n) { buf_.append(static_cast<const char*>(data), n); }
    void write_floats(const float* data, std::size_t count) { write_bytes(data, count * sizeof(float)); }
    const std::string& bytes() const { return buf_; }

  private:
    std::string buf_;
};

class ByteReader {
  public:
    ByteReader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void skip(std::size_t n) {
        require(n, "header");
        pos_ += n;
    }

    template <typename T>
    T read(const char* what) {
        require(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    void read_floats(float* out, std::size_t count) {
        require(count * sizeof(float), "float payload");
        std::memcpy(out, bytes_.data() + pos_, count * sizeof(float));
        pos_ += count * sizeof(float);
    }

    std::string read_string(std::size_t n) {
        require(n, "string");
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

  private:
    void require(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw InputError(source_ + ": truncated " + what + ": expected " + std::to_string(n) + " bytes, found " +
                             std::to_string(remaining()));
        }
    }

    const std::string& bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace claimclust::io
