#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "stash/common.hpp"
#include "stash/error.hpp"

namespace stash {

/// One raw inertial reading: accelerometer in m/s^2, gyroscope in rad/s.
struct ImuSample {
    Timestamp t = 0;
    Vec3 accel;
    Vec3 gyro;

    friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

/// Time-ordered samples. `rate_hz` is the nominal rate: the resampling target
/// for resampled streams, the mean observed rate for loaded recordings.
struct SensorStream {
    std::vector<ImuSample> samples;
    double rate_hz = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const {
        return samples.size() < 2 ? 0.0 : ns_to_seconds(samples.back().t - samples.front().t);
    }
    friend bool operator==(const SensorStream&, const SensorStream&) = default;
};

enum class RecordingFormat { Csv, Jsonl };

/// Pick the format from a file extension (".jsonl" -> Jsonl, everything else Csv).
RecordingFormat format_for(const std::filesystem::path& path);

/// CSV header `t_ns,ax,ay,az,gx,gy,gz`, or one JSON object per line with the
/// same keys. Throws ParseError (with line number) on malformed or non-finite
/// rows and OrderError on a timestamp that does not strictly increase.
SensorStream load_recording(const std::filesystem::path& path, RecordingFormat format);
SensorStream parse_recording(std::istream& in, RecordingFormat format);

void write_recording(const SensorStream& stream, std::ostream& out, RecordingFormat format);
void save_recording(const SensorStream& stream, const std::filesystem::path& path,
                    RecordingFormat format);

/// Linear interpolation onto the exact grid t0 + k/target_hz, stopping at the
/// last input sample (no extrapolation). Grid offsets are rounded to whole
/// nanoseconds, so 20 Hz yields an exact 50 ms spacing.
SensorStream resample(const SensorStream& stream, double target_hz);

struct GravityConfig {
    double time_constant_s = 1.0;
    /// Gravity is flagged unstable for this long after an orientation step.
    double settle_window_s = 3.0;
    /// Angle between the fast and slow accelerometer low-passes that counts as a step.
    double step_threshold_deg = 30.0;
    double fast_time_constant_s = 0.1;
};

/// Per-sample gravity estimate (device frame, same sign as the accelerometer
/// reading at rest) plus a stability flag, index-aligned with the input stream.
struct GravityEstimate {
    std::vector<Vec3> gravity;
    std::vector<std::uint8_t> stable;

    std::size_t size() const { return gravity.size(); }
};

/// First-order exponential low-pass of the accelerometer, seeded with the first
/// reading.
GravityEstimate estimate_gravity(const SensorStream& stream, const GravityConfig& config = {});

/// Element-wise accelerometer minus gravity.
std::vector<Vec3> linear_acceleration(const SensorStream& stream, const GravityEstimate& gravity);

struct RingBufferSpec {
    double capacity_duration_s = 3600.0;
    int precision_bits = 32;

    /// Throws InvalidArgument if the buffer cannot hold a reference path of
    /// `longest_path_s` seconds.
    void validate(double longest_path_s) const;
};

/// Capacity-bounded store that silently overwrites the oldest entry when full.
/// One writer, any number of readers; `snapshot()` copies a consistent view.
template <typename T, typename Alloc = std::allocator<T>>
class RingBuffer {
public:
    explicit RingBuffer(std::size_t capacity, const Alloc& alloc = Alloc())
        : storage_(alloc) {
        if (capacity == 0) fail(ErrorCode::InvalidArgument, "ring buffer capacity must be positive");
        storage_.resize(capacity);
    }

    void push(const T& value) {
        std::unique_lock lock(mutex_);
        storage_[(head_ + size_) % storage_.size()] = value;
        if (size_ < storage_.size()) {
            ++size_;
        } else {
            head_ = (head_ + 1) % storage_.size();
            ++overwritten_;
        }
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return size_;
    }
    std::size_t capacity() const { return storage_.size(); }
    std::size_t overwritten() const {
        std::shared_lock lock(mutex_);
        return overwritten_;
    }

    /// Oldest-first copy of the current contents.
    std::vector<T> snapshot() const {
        std::shared_lock lock(mutex_);
        std::vector<T> out;
        out.reserve(size_);
        for (std::size_t i = 0; i < size_; ++i) out.push_back(storage_[(head_ + i) % storage_.size()]);
        return out;
    }

    /// Element i positions from the oldest. Precondition: i < size().
    T at(std::size_t i) const {
        std::shared_lock lock(mutex_);
        if (i >= size_) fail(ErrorCode::InvalidArgument, "ring buffer index out of range");
        return storage_[(head_ + i) % storage_.size()];
    }

private:
    std::vector<T, Alloc> storage_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::size_t overwritten_ = 0;
    mutable std::shared_mutex mutex_;
};

/// Six 32-bit scalars; the storage unit of the sensor buffer.
struct PackedImu {
    float ax, ay, az, gx, gy, gz;
};
static_assert(sizeof(PackedImu) == 24);

PackedImu pack(const ImuSample& s);
ImuSample unpack(const PackedImu& p, Timestamp t);

/// Fixed-rate sensor buffer keyed by timestamp. Timestamps are not stored per
/// sample; they follow from the newest timestamp and the grid period, so pushes
/// must land exactly one period after the previous one.
template <typename Alloc = std::allocator<PackedImu>>
class ImuRingBuffer {
public:
    ImuRingBuffer(const RingBufferSpec& spec, double rate_hz, const Alloc& alloc = Alloc())
        : period_(seconds_to_ns(1.0 / rate_hz)),
          buffer_(capacity_for(spec, rate_hz), alloc) {}

    void push(const ImuSample& s) {
        std::unique_lock lock(writer_);
        if (newest_ && s.t != *newest_ + period_)
            fail(ErrorCode::OrderError, "sample is not on the buffer grid");
        buffer_.push(pack(s));
        newest_ = s.t;
    }

    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return buffer_.capacity(); }
    Timestamp period() const { return period_; }

    /// Samples with t in [from, to], oldest first.
    std::vector<ImuSample> window(Timestamp from, Timestamp to) const {
        std::shared_lock lock(writer_);
        std::vector<ImuSample> out;
        if (!newest_) return out;
        const auto items = buffer_.snapshot();
        const Timestamp oldest = *newest_ - static_cast<Timestamp>(items.size() - 1) * period_;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const Timestamp t = oldest + static_cast<Timestamp>(i) * period_;
            if (t >= from && t <= to) out.push_back(unpack(items[i], t));
        }
        return out;
    }

private:
    static std::size_t capacity_for(const RingBufferSpec& spec, double rate_hz) {
        if (spec.precision_bits != 32)
            fail(ErrorCode::InvalidArgument, "only 32-bit sample precision is supported");
        return static_cast<std::size_t>(std::llround(spec.capacity_duration_s * rate_hz));
    }

    Timestamp period_;
    RingBuffer<PackedImu, Alloc> buffer_;
    std::optional<Timestamp> newest_;
    mutable std::shared_mutex writer_;
};

} // namespace stash
