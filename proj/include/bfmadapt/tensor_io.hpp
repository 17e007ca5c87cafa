#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace bfma {

std::string base64_encode(const uint8_t* data, size_t n);
std::vector<uint8_t> base64_decode(const std::string& text);  // throws std::invalid_argument

// Tensors are stored as {"shape": [...], "data": "<base64 of little-endian float64>"}.
nlohmann::json tensor_to_json(const std::vector<long>& shape, const std::vector<double>& data);
std::vector<double> tensor_from_json(const nlohmann::json& j, std::vector<long>& shape_out);

}  // namespace bfma
