#include "fallwatch/hashing.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <openssl/evp.h>

#include "fallwatch/error.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

struct Sha256::State {
    EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : state_(std::make_unique<State>()) {
    state_->ctx = EVP_MD_CTX_new();
    if (!state_->ctx || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 initialisation failed");
}

Sha256::~Sha256() {
    if (state_ && state_->ctx) EVP_MD_CTX_free(state_->ctx);
}

Sha256& Sha256::update(std::span<const std::byte> bytes) {
    EVP_DigestUpdate(state_->ctx, bytes.data(), bytes.size());
    return *this;
}

Sha256& Sha256::update(std::string_view text) { return update(std::as_bytes(std::span(text.data(), text.size()))); }

std::array<std::uint8_t, 32> Sha256::digest() {
    std::array<std::uint8_t, 32> out{};
    unsigned int length = 0;
    EVP_DigestFinal_ex(state_->ctx, out.data(), &length);
    return out;
}

std::string Sha256::hex_digest() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (auto b : digest()) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) { return Sha256().update(text).hex_digest(); }

namespace {

void hash_file_into(const fs::path& path, Sha256& hasher) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        hasher.update(std::string_view(buffer.data(), static_cast<std::size_t>(in.gcount())));
    }
}

}  // namespace

std::string sha256_file(const fs::path& path) {
    Sha256 hasher;
    hash_file_into(path, hasher);
    return hasher.hex_digest();
}

std::string sha256_tree(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    Sha256 hasher;
    for (const auto& file : files) {
        hasher.update(fs::relative(file, root).generic_string());
        hasher.update(std::string_view("\0", 1));
        hasher.update(sha256_file(file));
    }
    return hasher.hex_digest();
}

}  // namespace fallwatch
