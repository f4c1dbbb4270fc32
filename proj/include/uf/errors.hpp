#pragma once

#include <stdexcept>

namespace uf {

// Error taxonomy shared across the library. Everything derives from Error so
// the CLI boundary can catch the whole family at once.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IntegrityError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };

}  // namespace uf
