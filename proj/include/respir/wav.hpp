#pragma once

#include <filesystem>

#include "respir/error.hpp"
#include "respir/signal.hpp"

namespace respir {

class WavError : public Error {
public:
    enum class Code {
        MissingFile,
        CorruptHeader,
        UnsupportedFormat,
        UnsupportedChannelCount,
        UnsupportedBitDepth,
        UnsupportedSampleRate,
        IoFailure,
    };

    WavError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Reads a mono 16-bit PCM WAV; samples are scaled by 1/32768 into [-1, 1].
// Channel and subject metadata are left at their defaults for the caller.
Signal read_wav(const std::filesystem::path& path);

// Writes a canonical 44-byte-header mono 16-bit PCM WAV. Quantization is
// round(sample * 32768) clamped to int16, the exact inverse of read_wav for
// data that came from a 16-bit file.
void write_wav(const std::filesystem::path& path, const Signal& signal);

}  // namespace respir
