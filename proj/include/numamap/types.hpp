#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace numamap {

using CoreId = std::uint32_t;
using NumaId = std::uint32_t;
using SocketId = std::uint32_t;
using ServerId = std::uint32_t;
using LlcId = std::uint32_t;
using VmId = std::uint32_t;
using Bytes = std::uint64_t;

inline constexpr Bytes kGiB = Bytes{1} << 30;

// Cache-interference classes. Values index the class-keyed tables.
enum class AnimalClass : std::uint8_t { Sheep = 0, Rabbit = 1, Devil = 2 };

inline constexpr std::array<AnimalClass, 3> kAllClasses{
    AnimalClass::Sheep, AnimalClass::Rabbit, AnimalClass::Devil};

constexpr std::size_t index_of(AnimalClass c) { return static_cast<std::size_t>(c); }

std::string_view to_string(AnimalClass c);
AnimalClass parse_animal_class(std::string_view name);

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Input documents or arguments are invalid. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised while executing a well-formed request. Maps to CLI exit code 2.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Not enough free cores or memory for a placement.
class CapacityError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

} // namespace numamap
