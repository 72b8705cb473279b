#include "vtreid/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <functional>
#include <sstream>

#include "vtreid/core/error.hpp"
#include "vtreid/core/hash.hpp"
#include "vtreid/core/rng.hpp"
#include "vtreid/pipeline/kv.hpp"

namespace vtreid::pipeline {

namespace {

std::string num(double v) {
  // Shortest text that reads back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // Keep a decimal point so the value reads back as a float literal.
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string list(const std::vector<std::int64_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

// One config key: how to read it into a RunConfig and how to print it.
struct Field {
  std::string key;
  std::function<void(const KvDocument&, RunConfig&)> read;
  std::function<std::string(const RunConfig&)> write;
};

Field make_int(const std::string& key, std::function<int&(RunConfig&)> ref) {
  return {key,
          [key, ref](const KvDocument& d, RunConfig& c) {
            const auto v = d.get_int(key);
            if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
              throw ConfigError("'" + key + "' is out of range");
            }
            ref(c) = static_cast<int>(v);
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Field make_u64(const std::string& key, std::function<std::uint64_t&(RunConfig&)> ref) {
  return {key,
          [key, ref](const KvDocument& d, RunConfig& c) {
            const auto v = d.get_int(key);
            if (v < 0) throw ConfigError("'" + key + "' must be nonnegative");
            ref(c) = static_cast<std::uint64_t>(v);
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Field make_double(const std::string& key, std::function<double&(RunConfig&)> ref) {
  return {key, [key, ref](const KvDocument& d, RunConfig& c) { ref(c) = d.get_double(key); },
          [ref](const RunConfig& c) { return num(ref(const_cast<RunConfig&>(c))); }};
}

Field make_bool(const std::string& key, std::function<bool&(RunConfig&)> ref) {
  return {key, [key, ref](const KvDocument& d, RunConfig& c) { ref(c) = d.get_bool(key); },
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

void style_fields(std::vector<Field>& f, const std::string& prefix, data::DomainStyle data::SyntheticSpec::*style) {
  f.push_back(make_double(prefix + ".brightness_shift", [style](RunConfig& c) -> double& { return (c.data.spec.*style).brightness_shift; }));
  f.push_back(make_double(prefix + ".contrast_gain", [style](RunConfig& c) -> double& { return (c.data.spec.*style).contrast_gain; }));
  f.push_back(make_double(prefix + ".hue_rotation", [style](RunConfig& c) -> double& { return (c.data.spec.*style).hue_rotation; }));
  f.push_back(make_u64(prefix + ".texture_seed", [style](RunConfig& c) -> std::uint64_t& { return (c.data.spec.*style).background_texture_seed; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(make_u64("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    f.push_back(make_int("data.n_identities", [](RunConfig& c) -> int& { return c.data.spec.n_identities; }));
    f.push_back(make_int("data.train_views", [](RunConfig& c) -> int& { return c.data.train_views; }));
    f.push_back(make_int("data.test_views", [](RunConfig& c) -> int& { return c.data.test_views; }));
    f.push_back(make_int("data.image_size", [](RunConfig& c) -> int& { return c.data.spec.image_size; }));
    f.push_back(make_u64("data.rng_seed", [](RunConfig& c) -> std::uint64_t& { return c.data.spec.rng_seed; }));
    style_fields(f, "data.source", &data::SyntheticSpec::source_style);
    style_fields(f, "data.target", &data::SyntheticSpec::target_style);

    auto& tr = f;
    tr.push_back(make_double("translate.lambda_cyc", [](RunConfig& c) -> double& { return c.translate.weights.lambda_cyc; }));
    tr.push_back(make_double("translate.lambda1", [](RunConfig& c) -> double& { return c.translate.weights.lambda_id; }));
    tr.push_back(make_double("translate.lambda2", [](RunConfig& c) -> double& { return c.translate.weights.lambda_style; }));
    tr.push_back(make_bool("translate.paper_literal_adv", [](RunConfig& c) -> bool& { return c.translate.paper_literal_adv; }));
    tr.push_back(make_bool("translate.freeze_mask_one", [](RunConfig& c) -> bool& { return c.translate.freeze_mask_one; }));
    tr.push_back(make_int("translate.batch_size", [](RunConfig& c) -> int& { return c.translate.batch_size; }));
    tr.push_back(make_int("translate.epochs", [](RunConfig& c) -> int& { return c.translate.epochs; }));
    tr.push_back(make_int("translate.steps", [](RunConfig& c) -> int& { return c.translate.steps; }));
    tr.push_back(make_double("translate.lr", [](RunConfig& c) -> double& { return c.translate.lr; }));
    tr.push_back(make_double("translate.beta1", [](RunConfig& c) -> double& { return c.translate.beta1; }));
    tr.push_back(make_double("translate.beta2", [](RunConfig& c) -> double& { return c.translate.beta2; }));
    tr.push_back(make_int("translate.checkpoint_every", [](RunConfig& c) -> int& { return c.translate.checkpoint_every; }));
    tr.push_back(make_int("translate.generator.stem_width", [](RunConfig& c) -> int& { return c.translate.generator.stem_width; }));
    tr.push_back(make_int("translate.generator.half_width", [](RunConfig& c) -> int& { return c.translate.generator.half_width; }));
    tr.push_back(make_int("translate.generator.residual_width", [](RunConfig& c) -> int& { return c.translate.generator.residual_width; }));
    tr.push_back(make_int("translate.generator.residual_blocks", [](RunConfig& c) -> int& { return c.translate.generator.residual_blocks; }));
    tr.push_back(make_int("translate.generator.stem_kernel", [](RunConfig& c) -> int& { return c.translate.generator.stem_kernel; }));
    tr.push_back(make_bool("translate.generator.attention", [](RunConfig& c) -> bool& { return c.translate.generator.attention; }));
    tr.push_back(make_bool("translate.generator.style_branch", [](RunConfig& c) -> bool& { return c.translate.generator.style_branch; }));
    tr.push_back(make_double("translate.generator.init_std", [](RunConfig& c) -> double& { return c.translate.generator.init_std; }));
    tr.push_back(make_int("translate.discriminator.base_width", [](RunConfig& c) -> int& { return c.translate.discriminator.base_width; }));
    tr.push_back(make_int("translate.discriminator.layers", [](RunConfig& c) -> int& { return c.translate.discriminator.layers; }));
    tr.push_back(make_bool("translate.discriminator.instance_norm", [](RunConfig& c) -> bool& { return c.translate.discriminator.instance_norm; }));
    tr.push_back(make_double("translate.discriminator.slope", [](RunConfig& c) -> double& { return c.translate.discriminator.slope; }));
    tr.push_back(make_double("translate.discriminator.init_std", [](RunConfig& c) -> double& { return c.translate.discriminator.init_std; }));

    f.push_back(make_int("reid.batch_size", [](RunConfig& c) -> int& { return c.reid.batch_size; }));
    f.push_back(make_int("reid.epochs", [](RunConfig& c) -> int& { return c.reid.epochs; }));
    f.push_back(make_int("reid.drop_epoch", [](RunConfig& c) -> int& { return c.reid.drop_epoch; }));
    f.push_back(make_int("reid.steps", [](RunConfig& c) -> int& { return c.reid.steps; }));
    f.push_back(make_int("reid.drop_step", [](RunConfig& c) -> int& { return c.reid.drop_step; }));
    f.push_back(make_double("reid.lr", [](RunConfig& c) -> double& { return c.reid.lr; }));
    f.push_back(make_double("reid.lr_drop_factor", [](RunConfig& c) -> double& { return c.reid.lr_drop_factor; }));
    f.push_back(make_double("reid.momentum", [](RunConfig& c) -> double& { return c.reid.momentum; }));
    f.push_back(make_double("reid.weight_decay", [](RunConfig& c) -> double& { return c.reid.weight_decay; }));
    f.push_back(make_int("reid.checkpoint_every", [](RunConfig& c) -> int& { return c.reid.checkpoint_every; }));
    f.push_back(make_int("reid.shift_augment", [](RunConfig& c) -> int& { return c.reid.shift_augment; }));
    f.push_back(make_bool("reid.flip_augment", [](RunConfig& c) -> bool& { return c.reid.flip_augment; }));
    f.push_back(make_int("reid.model.input_size", [](RunConfig& c) -> int& { return c.reid.model.input_size; }));
    f.push_back({"reid.model.stage_widths",
                 [](const KvDocument& d, RunConfig& c) {
                   const auto v = d.get_int_list("reid.model.stage_widths");
                   if (v.size() != 5) throw ConfigError("'reid.model.stage_widths' needs 5 entries");
                   for (std::size_t i = 0; i < 5; ++i) {
                     if (v[i] < 1 || v[i] > 65536) throw ConfigError("'reid.model.stage_widths' entries must be in [1, 65536]");
                     c.reid.model.stage_widths[i] = static_cast<int>(v[i]);
                   }
                 },
                 [](const RunConfig& c) {
                   return list({c.reid.model.stage_widths.begin(), c.reid.model.stage_widths.end()});
                 }});
    f.push_back(make_int("reid.model.fc1_width", [](RunConfig& c) -> int& { return c.reid.model.fc1_width; }));
    f.push_back(make_int("reid.model.fc2_width", [](RunConfig& c) -> int& { return c.reid.model.fc2_width; }));
    f.push_back(make_bool("reid.model.spatial_attention", [](RunConfig& c) -> bool& { return c.reid.model.spatial_attention; }));

    f.push_back({"eval.sizes",
                 [](const KvDocument& d, RunConfig& c) {
                   c.eval.sizes.clear();
                   for (auto v : d.get_int_list("eval.sizes")) {
                     if (v < 1 || v > 1000000) throw ConfigError("'eval.sizes' entries must be in [1, 1000000]");
                     c.eval.sizes.push_back(static_cast<int>(v));
                   }
                 },
                 [](const RunConfig& c) { return list({c.eval.sizes.begin(), c.eval.sizes.end()}); }});
    f.push_back({"eval.metric",
                 [](const KvDocument& d, RunConfig& c) {
                   try {
                     c.eval.metric = eval::parse_metric(d.get_string("eval.metric"));
                   } catch (const Error& e) {
                     throw ConfigError(std::string("'eval.metric': ") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return "\"" + std::string(eval::to_string(c.eval.metric)) + "\""; }});
    f.push_back(make_int("eval.max_rank", [](RunConfig& c) -> int& { return c.eval.max_rank; }));
    return f;
  }();
  return all;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("'" + key + "' " + what);
}

}  // namespace

data::SyntheticSpec DataConfig::render_spec() const {
  data::SyntheticSpec s = spec;
  s.images_per_identity_per_domain = train_views + test_views;
  return s;
}

void RunConfig::validate() const {
  require(preset == "desk-scale" || preset == "paper-scale", "preset", "must be desk-scale or paper-scale");
  require(data.spec.n_identities >= 2, "data.n_identities", "must be >= 2");
  require(data.train_views >= 1, "data.train_views", "must be >= 1");
  require(data.test_views >= 2, "data.test_views", "must be >= 2 (one gallery view plus queries)");
  require(data.spec.image_size >= 4 && data.spec.image_size % 4 == 0, "data.image_size", "must be a positive multiple of 4");
  require(data.spec.source_style.contrast_gain > 0, "data.source.contrast_gain", "must be positive");
  require(data.spec.target_style.contrast_gain > 0, "data.target.contrast_gain", "must be positive");
  require(data.spec.source_style != data.spec.target_style, "data.target", "must differ from data.source");

  const auto& w = translate.weights;
  require(w.lambda_cyc >= 0, "translate.lambda_cyc", "must be >= 0, got " + num(w.lambda_cyc));
  require(w.lambda_id >= 0, "translate.lambda1", "must be >= 0, got " + num(w.lambda_id));
  require(w.lambda_style >= 0, "translate.lambda2", "must be >= 0, got " + num(w.lambda_style));
  require(translate.batch_size >= 1, "translate.batch_size", "must be >= 1");
  require(translate.batch_size <= data.spec.n_identities * data.train_views, "translate.batch_size",
          "exceeds the training set size");
  require(translate.lr > 0, "translate.lr", "must be positive");
  require(translate.steps >= 0, "translate.steps", "must be >= 0");
  require(translate.epochs >= 1 || translate.steps > 0, "translate.epochs", "must be >= 1 when translate.steps is 0");
  require(translate.checkpoint_every >= 0, "translate.checkpoint_every", "must be >= 0");

  require(reid.model.input_size == data.spec.image_size, "reid.model.input_size", "must equal data.image_size");
  require(reid.model.input_size % 32 == 0, "reid.model.input_size", "must be a multiple of 32");
  require(reid.batch_size >= 1, "reid.batch_size", "must be >= 1");
  require(reid.lr > 0, "reid.lr", "must be positive");
  require(reid.lr_drop_factor > 0, "reid.lr_drop_factor", "must be positive");
  require(reid.momentum >= 0 && reid.momentum < 1, "reid.momentum", "must be in [0, 1)");
  require(reid.weight_decay >= 0, "reid.weight_decay", "must be >= 0");
  require(reid.shift_augment >= 0, "reid.shift_augment", "must be >= 0");
  require(reid.model.fc1_width >= 1, "reid.model.fc1_width", "must be >= 1");
  require(reid.model.fc2_width >= 1, "reid.model.fc2_width", "must be >= 1");

  require(!eval.sizes.empty(), "eval.sizes", "must not be empty");
  for (int s : eval.sizes) require(s >= 1 && s <= data.spec.n_identities, "eval.sizes", "entries must be in [1, data.n_identities]");
  require(eval.max_rank >= 1, "eval.max_rank", "must be >= 1");

  // Whatever the field checks above miss, the module validators catch.
  try {
    data.render_spec().validate();
    translation_config().validate();
    attnet::ReidTrainConfig r = reid_config(true);
    r.model.num_classes = data.spec.n_identities;
    r.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

std::string RunConfig::canonical() const {
  std::string s = "preset=" + preset + "\n";
  for (const auto& f : fields()) s += f.key + "=" + f.write(*this) + "\n";
  return s;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical())); }

vtgan::TranslationConfig RunConfig::translation_config() const {
  vtgan::TranslationConfig c = translate;
  c.seed = derive_seed(seed, 0x7472);
  return c;
}

attnet::ReidTrainConfig RunConfig::reid_config(bool attention) const {
  attnet::ReidTrainConfig c = reid;
  c.model.attention = attention;
  // Both heads and both training sets share one seed, so the four variants
  // differ only in what they are meant to differ in.
  c.seed = derive_seed(seed, 0x7265);
  return c;
}

std::uint64_t RunConfig::split_seed() const { return derive_seed(seed, 0x6576); }

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk-scale") {
    c.data.spec.n_identities = 16;
    c.data.spec.image_size = 64;
    c.data.train_views = 8;
    c.data.test_views = 4;
    c.translate.generator = {8, 16, 16, 9, 3, true, true, 0.02};
    c.translate.discriminator.base_width = 16;
    c.translate.batch_size = 1;
    c.translate.steps = 2000;
    c.reid.model.input_size = 64;
    c.reid.model.stage_widths = {8, 16, 32, 64, 64};
    c.reid.steps = 700;
    c.reid.drop_step = 630;
    c.reid.lr = 0.01;
    c.reid.shift_augment = 4;
    c.reid.flip_augment = true;
    c.eval.sizes = {8, 16};
  } else if (name == "paper-scale") {
    c.data.spec.n_identities = 3200;
    c.data.spec.image_size = 224;
    c.data.train_views = 8;
    c.data.test_views = 4;
    c.reid.model.input_size = 224;
    c.reid.model.stage_widths = {256, 512, 1024, 2048, 2048};
    c.reid.model.fc1_width = 1024;
    c.reid.model.fc2_width = 512;
    c.eval.sizes = {800, 1600, 2400, 3200};
  } else {
    throw ConfigError("'preset' must be desk-scale or paper-scale, got '" + name + "'");
  }
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  const KvDocument doc = KvDocument::parse(text);
  RunConfig c = preset(doc.has("preset") ? doc.get_string("preset") : "desk-scale");
  for (const auto& f : fields())
    if (doc.has(f.key)) f.read(doc, c);
  doc.reject_unconsumed();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& config) {
  std::string out = "preset = \"" + config.preset + "\"\n";
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string key = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += key + " = " + f.write(config) + "\n";
  }
  return out;
}

}  // namespace vtreid::pipeline
