#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace fallwatch {

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::byte> bytes);
    Sha256& update(std::string_view text);

    template <typename T>
    Sha256& update_values(std::span<const T> values) {
        return update(std::as_bytes(values));
    }

    std::array<std::uint8_t, 32> digest();
    std::string hex_digest();

private:
    struct State;
    std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Hash over every regular file below `root`: relative paths and contents in sorted order.
std::string sha256_tree(const std::filesystem::path& root);

}  // namespace fallwatch
