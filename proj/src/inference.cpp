#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pss/io.hpp"
#include "pss/llmpack.hpp"

namespace pss::llmpack {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_at = url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_at == std::string::npos) {
        ep.base = url;
        ep.path = "/v1/chat/completions";
    } else {
        ep.base = url.substr(0, path_at);
        ep.path = url.substr(path_at);
    }
    return ep;
}

using Key = std::pair<std::string, int>;

json checkpoint_line(const ParsedPrediction& p) {
    return json{{"stream_id", p.stream_id}, {"center_index", p.center_index},
                {"label", p.label},         {"status", to_string(p.status)},
                {"retries", p.retries},     {"failed", p.failed},
                {"raw", p.raw}};
}

// Loads finished instances from a resumable checkpoint. A partial final line
// (interrupted write) is dropped; damage anywhere else is corruption.
std::map<Key, ParsedPrediction> load_checkpoint(const std::filesystem::path& path) {
    std::map<Key, ParsedPrediction> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < data.size()) {
        auto nl = data.find('\n', pos);
        const bool complete = nl != std::string::npos;
        std::string_view line(data.data() + pos, (complete ? nl : data.size()) - pos);
        pos = complete ? nl + 1 : data.size();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            if (!complete) {
                std::cerr << "[warn] dropping partial checkpoint tail in " << path.string() << "\n";
                break;
            }
            throw ValidationError("corrupted checkpoint: " + path.string());
        }
        try {
            ParsedPrediction p;
            p.stream_id = j.at("stream_id").get<std::string>();
            p.center_index = j.at("center_index").get<int>();
            p.label = j.at("label").get<std::uint8_t>();
            p.status = parse_status_from_string(j.at("status").get<std::string>());
            p.retries = j.value("retries", 0);
            p.failed = j.value("failed", false);
            p.raw = j.value("raw", std::string());
            out[{p.stream_id, p.center_index}] = std::move(p);
        } catch (const std::exception& e) {
            throw ValidationError("corrupted checkpoint: " + path.string() + ": " + e.what());
        }
    }
    return out;
}

bool retryable(const httplib::Result& res) {
    if (!res) return true; // transport error
    return res->status == 429 || res->status >= 500;
}

} // namespace

std::vector<ParsedPrediction> run_inference(const std::vector<PromptInstance>& instances,
                                            const InferenceConfig& cfg,
                                            const std::filesystem::path& checkpoint_path) {
    validate(cfg);
    if (instances.empty()) return {};

    auto done = load_checkpoint(checkpoint_path);

    std::vector<const PromptInstance*> todo;
    for (const auto& inst : instances)
        if (!done.count({inst.stream_id, inst.center_index})) todo.push_back(&inst);

    const Endpoint ep = split_endpoint(cfg.endpoint);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (cfg.endpoint.rfind("https://", 0) == 0)
        throw ValidationError("built without TLS support; use an http:// endpoint");
#endif

    const char* key = std::getenv(cfg.api_key_env.c_str());

    std::ofstream ck(checkpoint_path, std::ios::binary | std::ios::app);
    if (!ck) throw ValidationError("cannot open checkpoint: " + checkpoint_path.string());
    std::mutex ck_mutex;

    std::vector<ParsedPrediction> fresh(todo.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        httplib::Client client(ep.base);
        client.set_connection_timeout(std::chrono::milliseconds(
            static_cast<long>(cfg.timeout_s * 1000)));
        client.set_read_timeout(std::chrono::milliseconds(static_cast<long>(cfg.timeout_s * 1000)));
        if (key) client.set_bearer_token_auth(key);

        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) break;
            const PromptInstance& inst = *todo[i];

            const json body{{"model", cfg.model},
                            {"messages", json::array({json{{"role", "user"}, {"content", inst.text}}})},
                            {"temperature", cfg.temperature},
                            {"max_tokens", cfg.max_output_tokens}};
            const std::string payload = body.dump();

            ParsedPrediction result;
            int attempt = 0;
            for (;;) {
                auto res = client.Post(ep.path, payload, "application/json");
                if (res && res->status == 200) {
                    std::string content;
                    json j = json::parse(res->body, nullptr, false);
                    if (!j.is_discarded()) {
                        auto it = j.find("choices");
                        if (it != j.end() && it->is_array() && !it->empty()) {
                            const auto& msg = (*it)[0];
                            if (msg.contains("message") && msg["message"].contains("content") &&
                                msg["message"]["content"].is_string())
                                content = msg["message"]["content"].get<std::string>();
                        }
                    }
                    result = parse_response(content);
                    break;
                }
                const bool retry = retryable(res) && attempt < cfg.max_retries;
                if (!retry) {
                    result.label = 0;
                    result.status = ParseStatus::empty;
                    result.failed = true;
                    result.raw = !res ? "transport error"
                                      : "http status " + std::to_string(res->status);
                    break;
                }
                const double delay = cfg.backoff_base_s * std::pow(2.0, attempt);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
                ++attempt;
            }
            result.stream_id = inst.stream_id;
            result.center_index = inst.center_index;
            result.retries = attempt;

            {
                std::lock_guard<std::mutex> lock(ck_mutex);
                ck << checkpoint_line(result).dump() << '\n';
                ck.flush();
            }
            fresh[i] = std::move(result);
        }
    };

    const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism),
                                                   std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (auto& p : fresh) done[{p.stream_id, p.center_index}] = std::move(p);

    std::vector<ParsedPrediction> out;
    out.reserve(done.size());
    for (auto& [k, p] : done) out.push_back(std::move(p)); // key order
    return out;
}

} // namespace pss::llmpack
