#include "gaple/config.hpp"

#include <charconv>
#include <functional>
#include <map>

#include "gaple/errors.hpp"
#include "gaple/io.hpp"

namespace gaple {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

struct Setter {
    std::function<void(const std::string& value, int line, const std::string& key)> apply;
};

template <typename T>
T parse_number(const std::string& value, int line, const std::string& key) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    std::from_chars_result r;
    if constexpr (std::is_floating_point_v<T>) {
        r = std::from_chars(begin, end, out);
    } else {
        r = std::from_chars(begin, end, out);
    }
    if (r.ec != std::errc{} || r.ptr != end) {
        throw ConfigError(line, key, "cannot parse '" + value + "' as a number");
    }
    return out;
}

bool parse_bool(const std::string& value, int line, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(line, key, "cannot parse '" + value + "' as a boolean");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig config;

    using Table = std::map<std::string, Setter>;
    std::map<std::string, Table> sections;

    auto num = [](auto* field) {
        return Setter{[field](const std::string& v, int line, const std::string& key) {
            *field = parse_number<std::remove_pointer_t<decltype(field)>>(v, line, key);
        }};
    };
    auto boolean = [](bool* field) {
        return Setter{[field](const std::string& v, int line, const std::string& key) {
            *field = parse_bool(v, line, key);
        }};
    };
    auto text_field = [](std::string* field) {
        return Setter{[field](const std::string& v, int, const std::string&) { *field = v; }};
    };
    auto list_field = [](std::vector<std::string>* field) {
        return Setter{[field](const std::string& v, int, const std::string&) {
            *field = split_list(v);
        }};
    };

    sections["run"] = {{"seed", num(&config.run.seed)}};
    sections["houses"] = {
        {"count", num(&config.houses.count)},
        {"width", num(&config.houses.width)},
        {"height", num(&config.houses.height)},
        {"rooms", num(&config.houses.rooms)},
        {"min_room", num(&config.houses.min_room)},
        {"max_room", num(&config.houses.max_room)},
        {"objects", num(&config.houses.objects)},
        {"max_object_cells", num(&config.houses.max_object_cells)},
        {"labels", list_field(&config.houses.labels)},
        {"files", list_field(&config.houses.files)},
    };
    sections["render"] = {
        {"width", num(&config.render.width)},
        {"height", num(&config.render.height)},
        {"fov_deg", num(&config.render.fov_deg)},
        {"max_range", num(&config.render.max_range)},
    };
    sections["perception"] = {
        {"width", num(&config.perception.width)},
        {"height", num(&config.perception.height)},
        {"epochs", num(&config.perception.epochs)},
        {"lr", num(&config.perception.lr)},
        {"batch", num(&config.perception.batch)},
        {"lambda", num(&config.perception.lambda)},
        {"sample_cap", num(&config.perception.sample_cap)},
        {"background_cap", num(&config.perception.background_cap)},
        {"holdout_frac", num(&config.perception.holdout_frac)},
        {"save_dataset", boolean(&config.perception.save_dataset)},
    };
    sections["policy"] = {
        {"workers", num(&config.policy.workers)},
        {"rollout_len", num(&config.policy.rollout_len)},
        {"max_env_steps", num(&config.policy.max_env_steps)},
        {"lr", num(&config.policy.lr)},
        {"gamma", num(&config.policy.gamma)},
        {"beta_entropy", num(&config.policy.beta_entropy)},
        {"value_coeff", num(&config.policy.value_coeff)},
        {"episode_step_cap", num(&config.policy.episode_step_cap)},
        {"grad_clip", num(&config.policy.grad_clip)},
        {"features", text_field(&config.policy.features)},
        {"obs", text_field(&config.policy.obs)},
        {"flip_p", num(&config.policy.flip_p)},
        {"depth_sigma", num(&config.policy.depth_sigma)},
        {"percep_ckpt", text_field(&config.policy.percep_ckpt)},
        {"log_interval", num(&config.policy.log_interval)},
    };
    sections["eval"] = {
        {"n_starts", num(&config.eval.n_starts)},
        {"cap", num(&config.eval.cap)},
        {"greedy", boolean(&config.eval.greedy)},
        {"write_traces", boolean(&config.eval.write_traces)},
    };
    sections["analysis"] = {
        {"extractor", text_field(&config.analysis.extractor)},
        {"max_steps", num(&config.analysis.max_steps)},
        {"sample_cap", num(&config.analysis.sample_cap)},
    };
    sections["setting"] = {
        {"objects_train", num(&config.setting.objects_train)},
        {"objects_test", num(&config.setting.objects_test)},
        {"env_train", num(&config.setting.env_train)},
        {"env_test", num(&config.setting.env_test)},
    };

    const Table* current = nullptr;
    std::string current_name;
    int lineno = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string raw = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        const size_t comment = raw.find('#');
        if (comment != std::string::npos) raw = raw.substr(0, comment);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(lineno, "", "unterminated section header");
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            auto it = sections.find(name);
            if (it == sections.end()) {
                throw ConfigError(lineno, name, "unknown section [" + name + "]");
            }
            current = &it->second;
            current_name = name;
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(lineno, "", "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "", "empty key");
        if (!current) {
            throw ConfigError(lineno, key, "assignment before any [section]");
        }
        auto it = current->find(key);
        if (it == current->end()) {
            throw ConfigError(lineno, key,
                              "unknown key '" + key + "' in section [" + current_name + "]");
        }
        it->second.apply(value, lineno, key);
    }

    return config;
}

RunConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

TrainConfig train_config_of(const RunConfig& config) {
    TrainConfig tc;
    tc.n_workers = config.policy.workers;
    tc.rollout_len = config.policy.rollout_len;
    tc.max_env_steps = config.policy.max_env_steps;
    tc.lr = config.policy.lr;
    tc.gamma = config.policy.gamma;
    tc.beta_entropy = config.policy.beta_entropy;
    tc.value_coeff = config.policy.value_coeff;
    tc.episode_step_cap = config.policy.episode_step_cap;
    tc.grad_clip = config.policy.grad_clip;
    tc.seed = config.run.seed;
    return tc;
}

RenderConfig render_config_of(const RunConfig& config) {
    RenderConfig rc;
    rc.width = config.render.width;
    rc.height = config.render.height;
    rc.fov_deg = config.render.fov_deg;
    rc.max_range = config.render.max_range;
    return rc;
}

}  // namespace gaple
