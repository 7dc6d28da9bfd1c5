#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "nobl/errors.hpp"

namespace nobl {

std::uint32_t crc32(std::span<const std::uint8_t> data,
                    std::uint32_t seed = 0);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes);

// Append-only little-endian encoder over a growable byte buffer.
class ByteWriter {
  public:
    template <typename T>
    void put(T value) {
        static_assert(std::is_arithmetic_v<T>);
        if constexpr (std::endian::native == std::endian::big) {
            auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
            std::reverse(raw.begin(), raw.end());
            value = std::bit_cast<T>(raw);
        }
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) {
        buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    }

    void put_string(const std::string& s) {
        put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

  private:
    std::vector<std::uint8_t> buf_;
};

// Cursor-based little-endian decoder; any read past the end reports the
// artifact as truncated.
class ByteReader {
  public:
    ByteReader(std::span<const std::uint8_t> bytes, std::string label)
        : bytes_(bytes), label_(std::move(label)) {}

    template <typename T>
    T get() {
        static_assert(std::is_arithmetic_v<T>);
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) {
            auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
            std::reverse(raw.begin(), raw.end());
            value = std::bit_cast<T>(raw);
        }
        return value;
    }

    std::string get_string() {
        const auto len = get<std::uint16_t>();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t count) {
        need(count);
        auto out = bytes_.subspan(pos_, count);
        pos_ += count;
        return out;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void expect_end() const {
        if (pos_ != bytes_.size())
            throw io_error(label_ + ": trailing bytes after payload");
    }

  private:
    void need(std::size_t count) const {
        if (bytes_.size() - pos_ < count)
            throw io_error(label_ + ": truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::string label_;
};

} // namespace nobl
