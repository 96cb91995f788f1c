#include "decisive/journal.hpp"

#include <stdexcept>
#include <string>

namespace decisive {

Journal::Journal(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open journal " + path_.string());
}

void Journal::append(const nlohmann::json& record) {
    const std::string line = record.dump();
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("write failed on journal " + path_.string());
}

std::vector<nlohmann::json> Journal::read(const std::filesystem::path& path) {
    std::vector<nlohmann::json> records;
    std::ifstream in(path);
    if (!in) return records;

    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(std::move(line));

    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto parsed = nlohmann::json::parse(lines[i], nullptr, false);
        if (parsed.is_discarded()) {
            if (i + 1 == lines.size()) break;
            throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": malformed journal record");
        }
        records.push_back(std::move(parsed));
    }
    return records;
}

}  // namespace decisive
