#pragma once

#include <stdexcept>
#include <string>

namespace supergen {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class BoundsError : public Error { public: using Error::Error; };
class SingularityError : public Error { public: using Error::Error; };
class OrderingError : public Error { public: using Error::Error; };
class FusionError : public Error { public: using Error::Error; };
class CacheStateError : public Error { public: using Error::Error; };
class MetricError : public Error { public: using Error::Error; };
class OwnershipError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// Replay failures carry the step/tile they were raised at.
class ReplayError : public Error {
public:
    ReplayError(const std::string& what, long step = -1, long tile = -1)
        : Error(format(what, step, tile)), step_(step), tile_(tile) {}

    long step() const noexcept { return step_; }
    long tile() const noexcept { return tile_; }

private:
    static std::string format(const std::string& what, long step, long tile) {
        std::string msg = "replay: " + what;
        if (step >= 0) msg += " (step " + std::to_string(step);
        if (tile >= 0) msg += (step >= 0 ? ", tile " : " (tile ") + std::to_string(tile);
        if (step >= 0 || tile >= 0) msg += ")";
        return msg;
    }

    long step_;
    long tile_;
};

}  // namespace supergen
