#include "bodyschema/hashing.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include <openssl/evp.h>

namespace bodyschema {

struct ContentHasher::Impl {
  EVP_MD_CTX* ctx = nullptr;
  Impl() : ctx(EVP_MD_CTX_new()) {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 initialization failed");
    }
  }
  ~Impl() { EVP_MD_CTX_free(ctx); }
};

ContentHasher::ContentHasher() : impl_(std::make_unique<Impl>()) {}
ContentHasher::~ContentHasher() = default;
ContentHasher::ContentHasher(ContentHasher&&) noexcept = default;
ContentHasher& ContentHasher::operator=(ContentHasher&&) noexcept = default;

ContentHasher& ContentHasher::update(std::span<const std::byte> bytes) {
  EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
  return *this;
}

ContentHasher& ContentHasher::update(std::string_view text) {
  return update(std::as_bytes(std::span(text.data(), text.size())));
}

namespace {

std::array<unsigned char, 32> finish(EVP_MD_CTX* ctx) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, out.data(), &len);
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  return out;
}

}  // namespace

std::string ContentHasher::hex_digest() {
  const auto raw = finish(impl_->ctx);
  std::string hex;
  hex.reserve(64);
  char buf[3];
  for (unsigned char c : raw) {
    std::snprintf(buf, sizeof(buf), "%02x", c);
    hex += buf;
  }
  return hex;
}

std::uint64_t ContentHasher::digest64() {
  const auto raw = finish(impl_->ctx);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | raw[i];
  return v;
}

std::string sha256_hex(std::string_view text) {
  ContentHasher h;
  h.update(text);
  return h.hex_digest();
}

}  // namespace bodyschema
