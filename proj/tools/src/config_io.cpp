/*
 Copyright 2026 The riskshield Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "riskshield_cli/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace riskshield::cli
{

    using nlohmann::json;

    namespace
    {
        json vec_json(const Eigen::VectorXd &v)
        {
            json out = json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i)
            {
                out.push_back(v[i]);
            }
            return out;
        }

        json mat_json(const Eigen::MatrixXd &M)
        {
            json out = json::array();
            for (Eigen::Index r = 0; r < M.rows(); ++r)
            {
                out.push_back(vec_json(M.row(r).transpose()));
            }
            return out;
        }

        std::string join(const std::string &path, const std::string &key)
        {
            return path.empty() ? key : path + "." + key;
        }

        /// Field accessor that remembers where it is in the document.
        class Reader
        {
        public:
            Reader(const json &node, std::string path) : node_(node), path_(std::move(path))
            {
                if (!node_.is_object())
                {
                    throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
                }
            }

            bool has(const std::string &key) const { return node_.contains(key); }

            Reader object(const std::string &key) const
            {
                return Reader(get(key), join(path_, key));
            }

            const json &get(const std::string &key) const
            {
                seen_.insert(key);
                if (!node_.contains(key))
                {
                    throw ConfigError(join(path_, key), "missing required field");
                }
                return node_.at(key);
            }

            double number(const std::string &key) const { return to_number(get(key), join(path_, key)); }

            int integer(const std::string &key) const
            {
                const json &j = get(key);
                if (!j.is_number_integer())
                {
                    throw ConfigError(join(path_, key), "expected an integer");
                }
                return j.get<int>();
            }

            std::uint64_t unsigned_integer(const std::string &key) const
            {
                const json &j = get(key);
                if (!j.is_number_unsigned())
                {
                    throw ConfigError(join(path_, key), "expected a nonnegative integer");
                }
                return j.get<std::uint64_t>();
            }

            bool boolean(const std::string &key) const
            {
                const json &j = get(key);
                if (!j.is_boolean())
                {
                    throw ConfigError(join(path_, key), "expected true or false");
                }
                return j.get<bool>();
            }

            std::string text(const std::string &key) const
            {
                const json &j = get(key);
                if (!j.is_string())
                {
                    throw ConfigError(join(path_, key), "expected a string");
                }
                return j.get<std::string>();
            }

            Eigen::VectorXd vector(const std::string &key) const
            {
                return to_vector(get(key), join(path_, key));
            }

            Eigen::MatrixXd matrix(const std::string &key) const
            {
                const std::string where = join(path_, key);
                const json &j = get(key);
                if (!j.is_array())
                {
                    throw ConfigError(where, "expected an array of rows");
                }
                if (j.empty())
                {
                    return {};
                }
                const auto rows = static_cast<Eigen::Index>(j.size());
                Eigen::Index cols = -1;
                Eigen::MatrixXd M;
                for (Eigen::Index r = 0; r < rows; ++r)
                {
                    const Eigen::VectorXd row = to_vector(j[static_cast<std::size_t>(r)], where);
                    if (cols < 0)
                    {
                        cols = row.size();
                        M.resize(rows, cols);
                    }
                    if (row.size() != cols)
                    {
                        throw ConfigError(where, "rows have different lengths");
                    }
                    M.row(r) = row.transpose();
                }
                return M;
            }

            /// Rejects keys that were never looked up.
            void finish() const
            {
                for (const auto &item : node_.items())
                {
                    if (!seen_.contains(item.key()))
                    {
                        throw ConfigError(join(path_, item.key()), "unknown field");
                    }
                }
            }

            const std::string &path() const { return path_; }

            static double to_number(const json &j, const std::string &where)
            {
                if (!j.is_number())
                {
                    throw ConfigError(where, "expected a number");
                }
                return j.get<double>();
            }

            static Eigen::VectorXd to_vector(const json &j, const std::string &where)
            {
                if (!j.is_array())
                {
                    throw ConfigError(where, "expected an array of numbers");
                }
                Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
                for (std::size_t i = 0; i < j.size(); ++i)
                {
                    v[static_cast<Eigen::Index>(i)] = to_number(j[i], where);
                }
                return v;
            }

        private:
            const json &node_;
            std::string path_;
            mutable std::set<std::string> seen_;
        };

        template <typename F>
        auto enum_field(const Reader &r, const std::string &key, F parse)
        {
            const std::string value = r.text(key);
            try
            {
                return parse(value);
            }
            catch (const ConfigError &)
            {
                throw;
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError(join(r.path(), key), e.what());
            }
        }
    } // namespace

    json config_to_json(const ScenarioConfig &cfg)
    {
        json doc;
        doc["schema_version"] = cfg.schema_version;
        doc["name"] = cfg.name;

        json outcomes = json::array();
        for (const Outcome &o : cfg.system.outcomes)
        {
            outcomes.push_back({{"A", mat_json(o.A)}, {"B", mat_json(o.B)}, {"G", vec_json(o.G)}});
        }
        doc["system"] = {{"template_id", cfg.system.template_id},
                         {"step_period", cfg.system.step_period},
                         {"A", mat_json(cfg.system.A)},
                         {"B", mat_json(cfg.system.B)},
                         {"u_lower", vec_json(cfg.system.u_lower)},
                         {"u_upper", vec_json(cfg.system.u_upper)},
                         {"outcomes", outcomes}};

        json samples = json::array();
        for (const auto &w : cfg.disturbance.samples)
        {
            samples.push_back(vec_json(w));
        }
        doc["disturbance"] = {{"samples", samples},
                              {"uniform", cfg.disturbance.uniform},
                              {"probs", cfg.disturbance.probs},
                              {"box_lower", vec_json(cfg.disturbance.box_lower)},
                              {"box_upper", vec_json(cfg.disturbance.box_upper)},
                              {"seed", cfg.disturbance.seed}};

        json atoms = json::array();
        for (const auto &a : cfg.barrier.atoms)
        {
            atoms.push_back({{"H", vec_json(a.H)}, {"l", a.l}});
        }
        doc["barrier"] = {{"composition", to_string(cfg.barrier.composition)}, {"atoms", atoms}};

        doc["certificate"] = {{"alpha", cfg.certificate.alpha},
                              {"beta", cfg.certificate.beta},
                              {"tail", to_string(cfg.certificate.tail)}};

        const LegacySpec &l = cfg.legacy;
        doc["legacy"] = {{"type", to_string(l.type)},
                         {"position_index", l.position_index},
                         {"velocity", vec_json(l.velocity)},
                         {"reference_start", vec_json(l.reference_start)},
                         {"sine_amplitude", vec_json(l.sine_amplitude)},
                         {"sine_period_steps", l.sine_period_steps},
                         {"gain", l.gain},
                         {"constant_u", vec_json(l.constant_u)}};

        doc["filter"] = {{"enabled", cfg.filter.enabled},
                         {"method", to_string(cfg.filter.method)},
                         {"dccp",
                          {{"max_iters", cfg.filter.dccp.max_iters},
                           {"stationarity_tol", cfg.filter.dccp.stationarity_tol},
                           {"initial_point", to_string(cfg.filter.dccp.initial_point)}}}};

        doc["x0"] = vec_json(cfg.x0);
        doc["steps"] = cfg.steps;
        doc["num_rollouts"] = cfg.num_rollouts;
        doc["master_seed"] = cfg.master_seed;
        return doc;
    }

    ScenarioConfig config_from_json(const json &doc)
    {
        Reader root(doc, "");
        ScenarioConfig cfg;
        cfg.schema_version = root.integer("schema_version");
        if (cfg.schema_version != kScenarioSchemaVersion)
        {
            throw ConfigError("schema_version",
                              "unsupported version " + std::to_string(cfg.schema_version));
        }
        if (root.has("name"))
        {
            cfg.name = root.text("name");
        }

        {
            Reader s = root.object("system");
            cfg.system.template_id = s.has("template_id") ? s.text("template_id") : "custom";
            if (s.has("step_period"))
            {
                cfg.system.step_period = s.number("step_period");
            }
            if (cfg.system.template_id == "s2s_planar")
            {
                if (!(cfg.system.step_period > 0.0))
                {
                    throw ConfigError("system.step_period", "must be positive");
                }
                s2s_planar_matrices(cfg.system.step_period, cfg.system.A, cfg.system.B);
            }
            else if (cfg.system.template_id != "custom")
            {
                throw ConfigError("system.template_id", "expected s2s_planar or custom");
            }
            if (s.has("A"))
            {
                cfg.system.A = s.matrix("A");
            }
            if (s.has("B"))
            {
                cfg.system.B = s.matrix("B");
            }
            cfg.system.u_lower = s.vector("u_lower");
            cfg.system.u_upper = s.vector("u_upper");
            if (s.has("outcomes"))
            {
                const json &arr = s.get("outcomes");
                if (!arr.is_array())
                {
                    throw ConfigError("system.outcomes", "expected an array");
                }
                for (const json &item : arr)
                {
                    Reader o(item, "system.outcomes");
                    cfg.system.outcomes.push_back({o.matrix("A"), o.matrix("B"), o.vector("G")});
                    o.finish();
                }
            }
            s.finish();
        }

        {
            Reader d = root.object("disturbance");
            const json &arr = d.get("samples");
            if (!arr.is_array())
            {
                throw ConfigError("disturbance.samples", "expected an array of vectors");
            }
            for (const json &w : arr)
            {
                cfg.disturbance.samples.push_back(Reader::to_vector(w, "disturbance.samples"));
            }
            cfg.disturbance.uniform = d.has("uniform") ? d.boolean("uniform") : true;
            if (d.has("probs"))
            {
                const Eigen::VectorXd p = d.vector("probs");
                cfg.disturbance.probs.assign(p.data(), p.data() + p.size());
            }
            if (d.has("box_lower"))
            {
                cfg.disturbance.box_lower = d.vector("box_lower");
            }
            if (d.has("box_upper"))
            {
                cfg.disturbance.box_upper = d.vector("box_upper");
            }
            if (d.has("seed"))
            {
                cfg.disturbance.seed = d.unsigned_integer("seed");
            }
            d.finish();
        }

        {
            Reader b = root.object("barrier");
            cfg.barrier.composition = b.has("composition")
                                          ? enum_field(b, "composition", composition_from_string)
                                          : BarrierComposition::Single;
            const json &arr = b.get("atoms");
            if (!arr.is_array())
            {
                throw ConfigError("barrier.atoms", "expected an array");
            }
            for (const json &item : arr)
            {
                Reader a(item, "barrier.atoms");
                cfg.barrier.atoms.push_back({a.vector("H"), a.number("l")});
                a.finish();
            }
            b.finish();
        }

        {
            Reader c = root.object("certificate");
            cfg.certificate.alpha = c.number("alpha");
            cfg.certificate.beta = c.number("beta");
            if (c.has("tail"))
            {
                cfg.certificate.tail = enum_field(c, "tail", tail_from_string);
            }
            c.finish();
        }

        {
            Reader l = root.object("legacy");
            LegacySpec &spec = cfg.legacy;
            spec.type = enum_field(l, "type", legacy_type_from_string);
            const bool tracking = spec.type == LegacyType::ReferenceTracking;
            if (!tracking || l.has("constant_u"))
            {
                spec.constant_u = l.vector("constant_u");
            }
            if (tracking || l.has("position_index"))
            {
                const json &idx = l.get("position_index");
                if (!idx.is_array())
                {
                    throw ConfigError("legacy.position_index", "expected an array of integers");
                }
                for (const json &i : idx)
                {
                    if (!i.is_number_integer())
                    {
                        throw ConfigError("legacy.position_index", "expected an array of integers");
                    }
                    spec.position_index.push_back(i.get<int>());
                }
            }
            if (tracking || l.has("velocity"))
            {
                spec.velocity = l.vector("velocity");
            }
            if (tracking || l.has("reference_start"))
            {
                spec.reference_start = l.vector("reference_start");
            }
            spec.sine_amplitude = l.has("sine_amplitude")
                                      ? l.vector("sine_amplitude")
                                      : Eigen::VectorXd::Zero(spec.velocity.size()).eval();
            if (l.has("sine_period_steps"))
            {
                spec.sine_period_steps = l.number("sine_period_steps");
            }
            if (l.has("gain"))
            {
                spec.gain = l.number("gain");
            }
            l.finish();
        }

        if (root.has("filter"))
        {
            Reader f = root.object("filter");
            if (f.has("enabled"))
            {
                cfg.filter.enabled = f.boolean("enabled");
            }
            if (f.has("method"))
            {
                cfg.filter.method = enum_field(f, "method", method_from_string);
            }
            if (f.has("dccp"))
            {
                Reader d = f.object("dccp");
                if (d.has("max_iters"))
                {
                    cfg.filter.dccp.max_iters = d.integer("max_iters");
                }
                if (d.has("stationarity_tol"))
                {
                    cfg.filter.dccp.stationarity_tol = d.number("stationarity_tol");
                }
                if (d.has("initial_point"))
                {
                    cfg.filter.dccp.initial_point =
                        enum_field(d, "initial_point", initial_point_from_string);
                }
                d.finish();
            }
            f.finish();
        }

        cfg.x0 = root.vector("x0");
        cfg.steps = root.integer("steps");
        cfg.num_rollouts = root.integer("num_rollouts");
        cfg.master_seed = root.unsigned_integer("master_seed");
        root.finish();

        validate(cfg);
        return cfg;
    }

    ScenarioConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ConfigError("config", "cannot open '" + path.string() + "'");
        }
        json doc;
        try
        {
            doc = json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("config", std::string("malformed JSON: ") + e.what());
        }
        return config_from_json(doc);
    }

    std::string canonical_dump(const json &doc)
    {
        // nlohmann::json objects are key-sorted maps, and dump() without an
        // indent emits no whitespace.
        return doc.dump();
    }

    std::uint64_t fnv1a64(std::string_view bytes)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : bytes)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::string config_hash(const ScenarioConfig &cfg)
    {
        std::ostringstream os;
        os << std::hex;
        os.width(16);
        os.fill('0');
        os << fnv1a64(canonical_dump(config_to_json(cfg)));
        return os.str();
    }

} // namespace riskshield::cli
