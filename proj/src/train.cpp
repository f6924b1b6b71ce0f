#include "mgml/train.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace mgml {

VarPtr objective(const BranchOutputs& outputs, std::span<const int> labels,
                 const std::array<double, 4>& lambda, const BranchSelect& select) {
    for (double l : lambda)
        if (l < 0.0) throw ConfigError("lambda weights must be >= 0");
    std::vector<VarPtr> terms;
    terms.push_back(scale(softmax_cross_entropy(outputs.logits_mb, labels).loss,
                          lambda[0]));
    if (select.ffb) {
        terms.push_back(scale(softmax_cross_entropy(outputs.logits_ffb, labels).loss,
                              lambda[1]));
    }
    if (select.fem) {
        terms.push_back(scale(softmax_cross_entropy(outputs.logits_fem3, labels).loss,
                              lambda[2]));
        terms.push_back(scale(softmax_cross_entropy(outputs.logits_fem4, labels).loss,
                              lambda[3]));
    }
    return add_scalars(terms);
}

namespace {

Tensor make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
    const Shape s0 = ds.images[indices[0]].shape();
    Tensor batch({static_cast<int>(indices.size()), s0.c, s0.h, s0.w});
    auto dst = batch.data();
    const std::size_t per = s0.numel();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = ds.images[indices[i]].data();
        std::copy_n(src.data(), per, dst.data() + i * per);
    }
    return batch;
}

std::vector<int> batch_labels(const Dataset& ds, std::span<const std::size_t> indices) {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = ds.labels[indices[i]];
    return out;
}

int branch_argmax(const Tensor& probs, int row) {
    int best = 0;
    double best_v = probs.at(row, 0, 0, 0);
    for (int j = 1; j < probs.shape().c; ++j) {
        if (probs.at(row, j, 0, 0) > best_v) {
            best_v = probs.at(row, j, 0, 0);
            best = j;
        }
    }
    return best;
}

} // namespace

EvalResult evaluate(const MgmlNet& model, const Dataset& dataset,
                    const BranchSelect& select, int batch_size) {
    if (dataset.size() == 0) throw ConfigError("cannot evaluate on an empty dataset");
    const int num_classes = model.config().num_classes;
    EvalResult r;
    r.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
    long correct_ens = 0, correct_mb = 0, correct_ffb = 0;
    long correct_f3 = 0, correct_f4 = 0;
    std::vector<std::size_t> indices(dataset.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    for (std::size_t start = 0; start < indices.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t count =
            std::min<std::size_t>(batch_size, indices.size() - start);
        std::span<const std::size_t> chunk(indices.data() + start, count);
        Tensor batch = make_batch(dataset, chunk);
        std::vector<int> labels = batch_labels(dataset, chunk);
        BranchOutputs out = model.forward(batch, select);
        for (std::size_t i = 0; i < count; ++i) {
            const int label = labels[i];
            const int pred = out.predicted[i];
            r.confusion[label][pred] += 1;
            correct_ens += (pred == label);
            correct_mb += (branch_argmax(out.p_mb, static_cast<int>(i)) == label);
            if (select.ffb)
                correct_ffb += (branch_argmax(out.p_ffb, static_cast<int>(i)) == label);
            if (select.fem) {
                correct_f3 += (branch_argmax(out.p_fem3, static_cast<int>(i)) == label);
                correct_f4 += (branch_argmax(out.p_fem4, static_cast<int>(i)) == label);
            }
            std::vector<double> row(num_classes);
            for (int j = 0; j < num_classes; ++j)
                row[j] = out.p_sum.at(static_cast<int>(i), j, 0, 0);
            r.psum_rows.push_back(std::move(row));
            r.labels.push_back(label);
        }
    }
    const double total = static_cast<double>(dataset.size());
    r.oa_ensemble = 100.0 * correct_ens / total;
    r.oa_mb = 100.0 * correct_mb / total;
    if (select.ffb) r.oa_ffb = 100.0 * correct_ffb / total;
    if (select.fem) {
        r.oa_fem3 = 100.0 * correct_f3 / total;
        r.oa_fem4 = 100.0 * correct_f4 / total;
    }
    return r;
}

double pairwise_accuracy(const EvalResult& eval, int a, int b) {
    long total = 0, correct = 0;
    for (std::size_t i = 0; i < eval.labels.size(); ++i) {
        const int label = eval.labels[i];
        if (label != a && label != b) continue;
        ++total;
        const int pred = (eval.psum_rows[i][b] > eval.psum_rows[i][a]) ? b : a;
        correct += (pred == label);
    }
    if (total == 0) throw ConfigError("no samples of classes " + std::to_string(a) +
                                      "/" + std::to_string(b) + " to score");
    return 100.0 * correct / static_cast<double>(total);
}

TrainResult train_model(MgmlNet& model, const Dataset& train_set,
                        const Dataset& test_set, const TrainConfig& cfg,
                        const BranchSelect& select) {
    cfg.validate();
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    std::vector<ParamPtr> params = model.params_for(select);
    OptimizerState opt;
    opt.momentum = cfg.momentum;
    opt.weight_decay = cfg.weight_decay;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(Rng::derive(cfg.seed, 0x5a5a));

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.learning_rate = lr_schedule(epoch, cfg.base_lr, cfg.milestones, cfg.lr_factor);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.next_below(static_cast<int>(i))]);
        }
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count =
                std::min<std::size_t>(cfg.batch_size, order.size() - start);
            std::span<const std::size_t> chunk(order.data() + start, count);
            Tensor batch = make_batch(train_set, chunk);
            std::vector<int> labels = batch_labels(train_set, chunk);
            zero_grads(params);
            BranchOutputs out = model.forward(batch, select);
            VarPtr loss = objective(out, labels, model.config().lambda, select);
            const double loss_v = loss->value.data()[0];
            if (std::isnan(loss_v)) {
                throw Error("training diverged: NaN loss at epoch " +
                            std::to_string(epoch));
            }
            loss_sum += loss_v * static_cast<double>(count);
            backward(loss);
            sgd_step(opt, params);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = opt.learning_rate;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.eval = evaluate(model, test_set, select, cfg.batch_size);
        result.curve.push_back(std::move(stats));
    }
    return result;
}

std::pair<Dataset, Dataset> prepare_data(const RunConfig& cfg) {
    Dataset full;
    if (cfg.data.kind == DataKind::Synthetic) {
        SceneSpec spec;
        spec.num_classes = cfg.model.num_classes;
        spec.image_size = cfg.data.image_size;
        spec.noise_std = cfg.data.noise_std;
        spec.seed = cfg.data.seed;
        full = generate_scenes(spec, cfg.data.per_class);
    } else if (!cfg.data.manifest.empty()) {
        full = load_image_dir(cfg.data.path, cfg.data.manifest);
    } else {
        full = load_image_dir(cfg.data.path);
    }
    if (full.num_classes() != cfg.model.num_classes) {
        throw ConfigError("dataset has " + std::to_string(full.num_classes()) +
                          " classes but config says " +
                          std::to_string(cfg.model.num_classes));
    }
    return split(full, SplitSpec{cfg.data.training_rate, cfg.data.seed});
}

int run_parallelism() {
    if (const char* env = std::getenv("MGML_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

double ExperimentResult::mean() const {
    double acc = 0.0;
    for (double v : per_run_oa) acc += v;
    return acc / static_cast<double>(per_run_oa.size());
}

double ExperimentResult::stddev() const {
    const double m = mean();
    double acc = 0.0;
    for (double v : per_run_oa) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(per_run_oa.size()));
}

ExperimentResult run_experiment(const RunConfig& cfg, const BranchSelect& select) {
    auto [train_set, test_set] = prepare_data(cfg);
    const int runs = cfg.train.runs;
    ExperimentResult result;
    result.runs.resize(runs);
    result.per_run_oa.assign(runs, 0.0);

    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&](int r) {
        try {
            TrainConfig run_cfg = cfg.train;
            run_cfg.seed = Rng::derive(cfg.train.seed, 9000 + r);
            MgmlNet model(cfg.model, run_cfg.seed);
            result.runs[r] = train_model(model, train_set, test_set, run_cfg, select);
            result.per_run_oa[r] = result.runs[r].final_oa();
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    const int workers = std::min(runs, run_parallelism());
    if (workers <= 1) {
        for (int r = 0; r < runs; ++r) work(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) work(r);
            });
        }
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return result;
}

} // namespace mgml
