#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

#include "json.hpp"

namespace decisive {

/// Append-only JSON-lines log. Each append is flushed before returning.
class Journal {
public:
    explicit Journal(std::filesystem::path path);

    void append(const nlohmann::json& record);
    const std::filesystem::path& path() const { return path_; }

    /// Reads every record. A truncated final line (crash mid-write) is dropped;
    /// a malformed line anywhere else throws std::runtime_error. Missing file reads as empty.
    static std::vector<nlohmann::json> read(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace decisive
