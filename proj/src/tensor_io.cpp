#include "bfmadapt/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace bfma {

static const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const uint8_t* data, size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= n; i += 3) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
  }
  if (i + 1 == n) {
    uint32_t v = data[i] << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (i + 2 == n) {
    uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

static int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) throw std::invalid_argument("base64: bad padding");
        vals[j] = 0;
        ++pad;
      } else {
        if (pad > 0) throw std::invalid_argument("base64: data after padding");
        vals[j] = b64_value(c);
        if (vals[j] < 0) throw std::invalid_argument("base64: invalid character");
      }
    }
    uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back((v >> 16) & 0xff);
    if (pad < 2) out.push_back((v >> 8) & 0xff);
    if (pad < 1) out.push_back(v & 0xff);
  }
  return out;
}

nlohmann::json tensor_to_json(const std::vector<long>& shape, const std::vector<double>& data) {
  size_t expect = 1;
  for (long s : shape) expect *= static_cast<size_t>(s);
  if (expect != data.size()) throw std::invalid_argument("tensor: shape does not match data size");
  std::vector<uint8_t> bytes(data.size() * 8);
  for (size_t i = 0; i < data.size(); ++i) {
    uint64_t bits = std::bit_cast<uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<uint8_t>(bits >> (8 * b));
  }
  nlohmann::json j;
  j["shape"] = shape;
  j["data"] = base64_encode(bytes.data(), bytes.size());
  return j;
}

std::vector<double> tensor_from_json(const nlohmann::json& j, std::vector<long>& shape_out) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw std::invalid_argument("tensor: missing shape or data");
  }
  shape_out = j.at("shape").get<std::vector<long>>();
  size_t expect = 1;
  for (long s : shape_out) {
    if (s < 0) throw std::invalid_argument("tensor: negative dimension");
    expect *= static_cast<size_t>(s);
  }
  std::vector<uint8_t> bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != expect * 8) throw std::invalid_argument("tensor: payload size mismatch");
  std::vector<double> data(expect);
  for (size_t i = 0; i < expect; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(bytes[i * 8 + b]) << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
  return data;
}

}  // namespace bfma
