// Copyright 2026 The PPS Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pps/ppsm_io.hpp"

#include <cstring>
#include <fstream>

namespace pps {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'S', 'M'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t u16() {
    require(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_]) |
                      static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8;
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    require(4);
    std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                      static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8 |
                      static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16 |
                      static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24;
    pos_ += 4;
    return v;
  }

  void bytes(void* dst, std::size_t n) {
    require(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("truncated PPSM data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ppsm(const LabelMap& map) {
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  if (map.pixels.size() != n)
    throw ValidationError("label map pixel buffer does not match its size");
  std::vector<std::uint8_t> out;
  out.reserve(16 + n * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kPpsmVersion);
  put_u16(out, 0);  // reserved
  put_u32(out, map.width);
  put_u32(out, map.height);
  for (std::uint32_t uid : map.pixels) put_u32(out, uid);
  return out;
}

LabelMap decode_ppsm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("not a PPSM stream (bad magic)");
  Reader r(bytes.subspan(4));
  const std::uint16_t version = r.u16();
  if (version != kPpsmVersion)
    throw IoError("unsupported PPSM version " + std::to_string(version));
  r.u16();  // reserved
  LabelMap map;
  map.width = r.u32();
  map.height = r.u32();
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  if (r.remaining() != n * 4)
    throw IoError("PPSM payload size does not match the header dimensions");
  map.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.pixels[i] = r.u32();
  return map;
}

void atomic_write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text) {
  atomic_write_file(
      path, std::span<const std::uint8_t>(
                reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_ppsm(const std::filesystem::path& path, const LabelMap& map) {
  atomic_write_file(path, encode_ppsm(map));
}

LabelMap read_ppsm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PPSM file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ppsm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace pps
