#include "motility/dataio.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "motility/binary_io.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"

namespace motility {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestColumns[] = {
    "participant_id", "frame_source", "fps",      "frame_count",    "age",      "bmi",
    "abstinence",     "concentration", "progressive", "nonprogressive", "immotile",
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_real(const std::string& text, std::size_t row, const std::string& column) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(Errc::BadNumeric,
                "row " + std::to_string(row) + ", column " + column + ": '" + text + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& text, std::size_t row, const std::string& column) {
  std::int64_t value = 0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw Error(Errc::BadNumeric,
                "row " + std::to_string(row) + ", column " + column + ": '" + text + "'");
  }
  return value;
}

void require(bool ok, std::size_t row, const char* column, const std::string& why) {
  if (!ok) {
    throw Error(Errc::BadNumeric, "row " + std::to_string(row) + ", column " + column + ": " + why);
  }
}

std::string format_real(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void check_targets(const std::string& participant_id, const MotilityTargets& targets) {
  const double sum = targets.sum();
  if (sum < 90.0 || sum > 110.0) {
    throw Error(Errc::TargetSumOutOfRange,
                participant_id + ": motility targets sum to " + format_real(sum));
  }
  if (sum < 98.0 || sum > 102.0) {
    warn(participant_id + ": motility targets sum to " + format_real(sum) +
         " (outside the [98, 102] rounding band)");
  }
}

std::vector<VideoRecord> parse_manifest(std::istream& in, const fs::path& base_dir) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "manifest is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[trim(header[i])] = i;
  for (const char* name : kManifestColumns) {
    if (!column.contains(name)) throw Error(Errc::MissingColumn, name);
  }

  std::vector<VideoRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    auto get = [&](const char* name) -> std::string {
      const std::size_t idx = column.at(name);
      return idx < fields.size() ? trim(fields[idx]) : std::string();
    };

    VideoRecord rec;
    rec.participant_id = get("participant_id");
    require(!rec.participant_id.empty(), row, "participant_id", "empty");
    fs::path source = get("frame_source");
    require(!source.empty(), row, "frame_source", "empty");
    rec.frame_source = (source.is_relative() && !base_dir.empty())
                           ? (base_dir / source).lexically_normal()
                           : source;
    rec.fps = parse_real(get("fps"), row, "fps");
    require(rec.fps > 0.0, row, "fps", "must be > 0");
    rec.frame_count = parse_int(get("frame_count"), row, "frame_count");
    rec.features.age = parse_real(get("age"), row, "age");
    require(rec.features.age > 0.0, row, "age", "must be > 0");
    rec.features.bmi = parse_real(get("bmi"), row, "bmi");
    require(rec.features.bmi > 0.0, row, "bmi", "must be > 0");
    rec.features.abstinence = parse_real(get("abstinence"), row, "abstinence");
    require(rec.features.abstinence >= 0.0, row, "abstinence", "must be >= 0");
    const std::string conc = get("concentration");
    if (!conc.empty()) {
      rec.features.concentration = parse_real(conc, row, "concentration");
      require(*rec.features.concentration >= 0.0, row, "concentration", "must be >= 0");
    }
    for (int t = 0; t < kTargetCount; ++t) {
      rec.targets[t] = parse_real(get(kTargetNames[t]), row, kTargetNames[t]);
      require(rec.targets[t] >= 0.0 && rec.targets[t] <= 100.0, row, kTargetNames[t],
              "must lie in [0, 100]");
    }
    check_targets(rec.participant_id, rec.targets);
    if (rec.frame_count < 30) {
      throw Error(Errc::VideoTooShort, rec.participant_id + ": frame_count " +
                                           std::to_string(rec.frame_count) + " < 30");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<VideoRecord> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const std::vector<VideoRecord>& records) {
  for (std::size_t i = 0; i < std::size(kManifestColumns); ++i) {
    out << (i ? "," : "") << kManifestColumns[i];
  }
  out << '\n';
  for (const auto& r : records) {
    out << csv_field(r.participant_id) << ',' << csv_field(r.frame_source.string()) << ','
        << format_real(r.fps) << ',' << r.frame_count << ',' << format_real(r.features.age) << ','
        << format_real(r.features.bmi) << ',' << format_real(r.features.abstinence) << ','
        << (r.features.concentration ? format_real(*r.features.concentration) : std::string())
        << ',' << format_real(r.targets.progressive) << ','
        << format_real(r.targets.nonprogressive) << ',' << format_real(r.targets.immotile) << '\n';
  }
}

void write_manifest(const fs::path& path, const std::vector<VideoRecord>& records) {
  std::ostringstream out;
  write_manifest(out, records);
  binio::atomic_write(path, out.str());
}

// ---------------------------------------------------------------------------
// Frame sources

namespace {

class RawSequence final : public FrameSequence {
 public:
  RawSequence(const fs::path& path, int channels) : path_(path), channels_(channels) {
    in_.open(path, std::ios::binary);
    if (!in_) throw Error(Errc::UnreadableFrame, "cannot open " + path.string());
    const char* magic = channels == 1 ? "Y8SQ" : "RGBS";
    if (!binio::read_magic(in_, magic)) {
      throw Error(Errc::BadFormat, path.string() + ": bad magic, expected " + magic);
    }
    width_ = static_cast<int>(binio::read_pod<std::uint32_t>(in_));
    height_ = static_cast<int>(binio::read_pod<std::uint32_t>(in_));
    count_ = binio::read_pod<std::uint32_t>(in_);
    if (width_ <= 0 || height_ <= 0) throw Error(Errc::BadFormat, path.string() + ": zero-sized frames");
    buffer_.resize(frame_bytes());
  }

  std::int64_t frame_count() const override { return count_; }
  int width() const override { return width_; }
  int height() const override { return height_; }
  int channels() const override { return channels_; }

  FrameTensor read(std::int64_t index) override {
    if (index < 0 || index >= count_) {
      throw Error(Errc::UnreadableFrame, path_.string() + ": frame " + std::to_string(index) +
                                             " out of range");
    }
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(16 + index * static_cast<std::int64_t>(frame_bytes())));
    in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!in_) {
      throw Error(Errc::UnreadableFrame, path_.string() + ": frame " + std::to_string(index) +
                                             " truncated");
    }
    FrameTensor frame(height_, width_, channels_);
    auto dst = frame.data();
    for (std::size_t i = 0; i < buffer_.size(); ++i) dst[i] = buffer_[i];
    return frame;
  }

 private:
  std::size_t frame_bytes() const {
    return static_cast<std::size_t>(width_) * height_ * channels_;
  }

  fs::path path_;
  std::ifstream in_;
  int channels_;
  int width_ = 0;
  int height_ = 0;
  std::int64_t count_ = 0;
  std::vector<std::uint8_t> buffer_;
};

struct ImageInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};

// Reads a binary PNM header and leaves the stream at the pixel data.
ImageInfo read_pnm_header(std::istream& in, const fs::path& path) {
  std::string magic;
  in >> magic;
  ImageInfo info;
  if (magic == "P5") info.channels = 1;
  else if (magic == "P6") info.channels = 3;
  else throw Error(Errc::UnreadableFrame, path.string() + ": unsupported PNM type " + magic);
  int values[3];
  for (int& v : values) {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    in >> v;
  }
  if (!in || values[2] != 255) throw Error(Errc::UnreadableFrame, path.string() + ": bad PNM header");
  in.get();
  info.width = values[0];
  info.height = values[1];
  return info;
}

bool is_png(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png";
}

ImageInfo probe_image(const fs::path& path) {
  if (is_png(path)) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw Error(Errc::UnreadableFrame, path.string() + ": " + image.message);
    }
    ImageInfo info{static_cast<int>(image.width), static_cast<int>(image.height), 3};
    png_image_free(&image);
    return info;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableFrame, "cannot open " + path.string());
  return read_pnm_header(in, path);
}

FrameTensor decode_image(const fs::path& path) {
  if (is_png(path)) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw Error(Errc::UnreadableFrame, path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
      const std::string message = image.message;
      png_image_free(&image);
      throw Error(Errc::UnreadableFrame, path.string() + ": " + message);
    }
    FrameTensor frame(static_cast<int>(image.height), static_cast<int>(image.width), 3);
    auto dst = frame.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = pixels[i];
    return frame;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableFrame, "cannot open " + path.string());
  const ImageInfo info = read_pnm_header(in, path);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(info.width) * info.height * info.channels);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw Error(Errc::UnreadableFrame, path.string() + ": truncated pixel data");
  FrameTensor frame(info.height, info.width, info.channels);
  auto dst = frame.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = pixels[i];
  return frame;
}

class ImageDirectory final : public FrameSequence {
 public:
  explicit ImageDirectory(const fs::path& dir) : dir_(dir) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files_.empty()) throw Error(Errc::UnreadableFrame, dir.string() + ": no image files");
    for (std::size_t i = 0; i < files_.size(); ++i) {
      const ImageInfo info = probe_image(files_[i]);
      if (i == 0) {
        info_ = info;
      } else if (info.width != info_.width || info.height != info_.height ||
                 info.channels != info_.channels) {
        throw Error(Errc::InconsistentDimensions,
                    "frame " + std::to_string(i) + " (" + files_[i].filename().string() + ") is " +
                        std::to_string(info.width) + "x" + std::to_string(info.height) +
                        ", expected " + std::to_string(info_.width) + "x" +
                        std::to_string(info_.height));
      }
    }
  }

  std::int64_t frame_count() const override { return static_cast<std::int64_t>(files_.size()); }
  int width() const override { return info_.width; }
  int height() const override { return info_.height; }
  int channels() const override { return info_.channels; }

  FrameTensor read(std::int64_t index) override {
    if (index < 0 || index >= frame_count()) {
      throw Error(Errc::UnreadableFrame, dir_.string() + ": frame " + std::to_string(index) +
                                             " out of range");
    }
    FrameTensor frame = decode_image(files_[static_cast<std::size_t>(index)]);
    if (frame.width() != info_.width || frame.height() != info_.height) {
      throw Error(Errc::InconsistentDimensions, "frame " + std::to_string(index));
    }
    return frame;
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  ImageInfo info_;
};

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void write_raw(const fs::path& path, const std::vector<FrameTensor>& frames, int channels,
               const char* magic) {
  if (frames.empty()) throw Error(Errc::EmptyDataset, "no frames to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  const auto& first = frames.front();
  binio::write_magic(out, magic);
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(first.width()));
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(first.height()));
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
  std::vector<std::uint8_t> bytes(first.size());
  for (const auto& f : frames) {
    if (!f.same_shape(first) || f.channels() != channels) {
      throw Error(Errc::InconsistentDimensions, "frames differ in shape");
    }
    auto src = f.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(src[i]);
    binio::write_array<std::uint8_t>(out, bytes);
  }
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

}  // namespace

std::unique_ptr<FrameSequence> open_frames(const fs::path& source) {
  std::error_code ec;
  if (fs::is_directory(source, ec)) return std::make_unique<ImageDirectory>(source);
  if (!fs::exists(source, ec)) throw Error(Errc::UnreadableFrame, "missing frame source " + source.string());
  const auto ext = source.extension().string();
  if (ext == ".y8seq") return std::make_unique<RawSequence>(source, 1);
  if (ext == ".rgbseq") return std::make_unique<RawSequence>(source, 3);
  throw Error(Errc::UnreadableFrame, "unsupported frame source " + source.string());
}

std::unique_ptr<FrameSequence> open_frames(const VideoRecord& record) {
  try {
    return open_frames(record.frame_source);
  } catch (const Error& e) {
    throw Error(e.code(), "participant " + record.participant_id + ": " + e.detail());
  }
}

void write_y8seq(const fs::path& path, const std::vector<FrameTensor>& frames) {
  write_raw(path, frames, 1, "Y8SQ");
}

void write_rgbseq(const fs::path& path, const std::vector<FrameTensor>& frames) {
  write_raw(path, frames, 3, "RGBS");
}

struct Y8SeqWriter::Impl {
  std::ofstream out;
  fs::path path;
  int width;
  int height;
  std::uint32_t count = 0;
  std::vector<std::uint8_t> bytes;
};

Y8SeqWriter::Y8SeqWriter(const fs::path& path, int width, int height)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw Error(Errc::Io, "cannot write " + path.string());
  impl_->path = path;
  impl_->width = width;
  impl_->height = height;
  impl_->bytes.resize(static_cast<std::size_t>(width) * height);
  binio::write_magic(impl_->out, "Y8SQ");
  binio::write_pod<std::uint32_t>(impl_->out, static_cast<std::uint32_t>(width));
  binio::write_pod<std::uint32_t>(impl_->out, static_cast<std::uint32_t>(height));
  binio::write_pod<std::uint32_t>(impl_->out, 0);
}

Y8SeqWriter::~Y8SeqWriter() {
  try {
    close();
  } catch (...) {
  }
}

void Y8SeqWriter::append(const FrameTensor& frame) {
  if (!impl_->out.is_open()) throw Error(Errc::Io, "writer closed");
  if (frame.width() != impl_->width || frame.height() != impl_->height || frame.channels() != 1) {
    throw Error(Errc::InconsistentDimensions, "Y8SeqWriter: frame shape mismatch");
  }
  auto src = frame.data();
  for (std::size_t i = 0; i < impl_->bytes.size(); ++i) impl_->bytes[i] = to_byte(src[i]);
  binio::write_array<std::uint8_t>(impl_->out, impl_->bytes);
  ++impl_->count;
}

void Y8SeqWriter::close() {
  if (!impl_ || !impl_->out.is_open()) return;
  impl_->out.seekp(12);
  binio::write_pod<std::uint32_t>(impl_->out, impl_->count);
  impl_->out.close();
  if (impl_->out.fail()) throw Error(Errc::Io, "failed to finalize " + impl_->path.string());
}

void write_png(const fs::path& path, const FrameTensor& frame) {
  if (frame.channels() != 1 && frame.channels() != 3) {
    throw Error(Errc::WrongChannelCount, "write_png expects 1 or 3 channels");
  }
  std::vector<png_byte> bytes(frame.size());
  auto src = frame.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(src[i]);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = frame.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(Errc::Io, path.string() + ": " + image.message);
  }
}

// ---------------------------------------------------------------------------
// Sampling schedules

std::vector<SampleWindow> schedule_windows(std::int64_t frame_count, int n_samples, int length,
                                           const std::string& video) {
  if (n_samples < 1 || length < 1) throw Error(Errc::Usage, "n_samples and length must be >= 1");
  if (frame_count < length) {
    throw Error(Errc::VideoTooShort, "frame_count " + std::to_string(frame_count) +
                                         " < window length " + std::to_string(length));
  }
  std::vector<SampleWindow> windows;
  windows.reserve(static_cast<std::size_t>(n_samples));
  const std::int64_t span = frame_count - length;
  const std::int64_t den = n_samples - 1;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    // round(i * span / den), half away from zero, in exact integer arithmetic.
    const std::int64_t start = den == 0 ? 0 : (2 * i * span + den) / (2 * den);
    windows.push_back({video, start, length});
  }
  return windows;
}

std::vector<std::int64_t> classical_frame_indices(double fps, int seconds) {
  if (!(fps > 0.0)) throw Error(Errc::Usage, "fps must be > 0");
  std::vector<std::int64_t> indices;
  indices.reserve(2 * static_cast<std::size_t>(std::max(seconds, 0)));
  for (int s = 0; s < seconds; ++s) {
    indices.push_back(std::llround(s * fps));
    indices.push_back(std::llround(s * fps + fps / 2.0));
  }
  return indices;
}

}  // namespace motility
