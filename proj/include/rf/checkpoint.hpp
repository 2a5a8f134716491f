#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "rf/common.hpp"

namespace rf {

// One named tensor inside a checkpoint: shape header plus a little-endian
// 32-bit float payload.
struct TensorBlob {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
  }
};

inline TensorBlob blob_from_doubles(const std::string& name,
                                    const std::vector<std::uint64_t>& dims,
                                    const std::vector<double>& values) {
  TensorBlob b;
  b.name = name;
  b.dims = dims;
  b.data.reserve(values.size());
  for (double v : values) b.data.push_back(static_cast<float>(v));
  require(b.element_count() == b.data.size(), "blob: dims do not match value count");
  return b;
}

inline std::vector<double> doubles_from_blob(const TensorBlob& b) {
  return std::vector<double>(b.data.begin(), b.data.end());
}

namespace detail {

constexpr char kCheckpointMagic[4] = {'R', 'F', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void append_raw(std::vector<unsigned char>& buf, const T& value) {
  const unsigned char* p = reinterpret_cast<const unsigned char*>(&value);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T read_raw(const std::vector<unsigned char>& buf, std::size_t& offset) {
  if (offset + sizeof(T) > buf.size()) throw DataError("checkpoint: truncated file");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

}  // namespace detail

// Serializes blobs into the checkpoint byte layout: magic, version, section
// count, then per section (name, ndim, dims, f32 payload), then a sha256 of
// everything preceding it.
inline std::vector<unsigned char> encode_checkpoint(const std::vector<TensorBlob>& blobs) {
  using namespace detail;
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kCheckpointMagic, kCheckpointMagic + 4);
  append_raw(buf, kCheckpointVersion);
  append_raw(buf, static_cast<std::uint32_t>(blobs.size()));
  for (const TensorBlob& b : blobs) {
    require(b.name.size() <= 0xffff, "checkpoint: section name too long");
    require(b.element_count() == b.data.size(), "checkpoint: dims do not match payload");
    append_raw(buf, static_cast<std::uint16_t>(b.name.size()));
    buf.insert(buf.end(), b.name.begin(), b.name.end());
    append_raw(buf, static_cast<std::uint32_t>(b.dims.size()));
    for (std::uint64_t d : b.dims) append_raw(buf, d);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(b.data.data());
    buf.insert(buf.end(), p, p + b.data.size() * sizeof(float));
  }
  unsigned char md[32];
  unsigned int md_len = 0;
  EVP_Digest(buf.data(), buf.size(), md, &md_len, EVP_sha256(), nullptr);
  buf.insert(buf.end(), md, md + 32);
  return buf;
}

inline std::vector<TensorBlob> decode_checkpoint(const std::vector<unsigned char>& buf) {
  using namespace detail;
  if (buf.size() < 4 + 4 + 4 + 32) throw DataError("checkpoint: truncated file");
  if (std::memcmp(buf.data(), kCheckpointMagic, 4) != 0)
    throw DataError("checkpoint: bad magic bytes");

  // hash trailer covers everything before it
  unsigned char md[32];
  unsigned int md_len = 0;
  EVP_Digest(buf.data(), buf.size() - 32, md, &md_len, EVP_sha256(), nullptr);
  if (std::memcmp(md, buf.data() + buf.size() - 32, 32) != 0)
    throw DataError("checkpoint: content hash mismatch (corrupt file)");

  std::size_t offset = 4;
  std::uint32_t version = read_raw<std::uint32_t>(buf, offset);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unknown format version " + std::to_string(version));
  std::uint32_t count = read_raw<std::uint32_t>(buf, offset);

  std::vector<TensorBlob> blobs(count);
  const std::size_t payload_end = buf.size() - 32;
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorBlob& b = blobs[i];
    std::uint16_t name_len = read_raw<std::uint16_t>(buf, offset);
    if (offset + name_len > payload_end) throw DataError("checkpoint: truncated file");
    b.name.assign(reinterpret_cast<const char*>(buf.data() + offset), name_len);
    offset += name_len;
    std::uint32_t ndim = read_raw<std::uint32_t>(buf, offset);
    b.dims.resize(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) b.dims[d] = read_raw<std::uint64_t>(buf, offset);
    std::uint64_t elems = b.element_count();
    if (offset + elems * sizeof(float) > payload_end)
      throw DataError("checkpoint: truncated file");
    b.data.resize(elems);
    std::memcpy(b.data.data(), buf.data() + offset, elems * sizeof(float));
    offset += elems * sizeof(float);
  }
  if (offset != payload_end) throw DataError("checkpoint: trailing bytes before hash");
  return blobs;
}

// Atomic write: temporary file in the same directory, then rename.
inline void save_checkpoint(const std::string& path, const std::vector<TensorBlob>& blobs) {
  std::vector<unsigned char> buf = encode_checkpoint(blobs);
  std::string tmp = path + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (f == nullptr) throw DataError("checkpoint: cannot open for write: " + tmp);
    std::size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    if (written != buf.size()) {
      std::remove(tmp.c_str());
      throw DataError("checkpoint: short write: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw DataError("checkpoint: rename failed: " + path + " (" + ec.message() + ")");
  }
}

inline std::vector<TensorBlob> load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw DataError("checkpoint: cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<unsigned char> buf(static_cast<std::size_t>(size));
  std::size_t read = std::fread(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (read != buf.size()) throw DataError("checkpoint: short read: " + path);
  return decode_checkpoint(buf);
}

inline std::string checkpoint_content_hash(const std::vector<TensorBlob>& blobs) {
  std::vector<unsigned char> buf = encode_checkpoint(blobs);
  return sha256_hex(buf.data(), buf.size());
}

inline const TensorBlob& find_blob(const std::vector<TensorBlob>& blobs, const std::string& name) {
  for (const TensorBlob& b : blobs)
    if (b.name == name) return b;
  throw DataError("checkpoint: missing section " + name);
}

inline bool has_blob(const std::vector<TensorBlob>& blobs, const std::string& name) {
  for (const TensorBlob& b : blobs)
    if (b.name == name) return true;
  return false;
}

}  // namespace rf
