"""Loss assembly, AdamW optimization, and the document-level training loop."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .data import Document
from .encoder import PrecomputedProvider
from .metrics import MetricsReport, aggregate, decode, gold_predictions
from .model import DocOutputs, ModelConfig, PairModel

CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    pass


class OptimizerError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lambda1: float = 0.4
    lambda2: float = 0.4
    learning_rate: float = 1e-3
    batch_size: int = 4
    epochs: int = 30
    dropout_rate: float = 0.1
    seed: int = 0
    weight_decay: float = 0.01
    threshold: float = 0.5
    encoding: str = "pfn"
    ita: str = "both"
    aux: bool = True
    literal_loss: bool = False
    share_gate_params: bool = False
    detach_side: str = "none"

    def validate(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be nonnegative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


def build_model(cfg: TrainConfig, hidden: int = 300, embed_dim: int = 64,
                dim_pos: int = 50, max_offset: int = 10, mask_dim: int = 64,
                vocab: dict[str, int] | None = None,
                provider: PrecomputedProvider | None = None) -> PairModel:
    cfg.validate()
    model_cfg = ModelConfig(
        hidden=hidden, embed_dim=embed_dim, dim_pos=dim_pos, max_offset=max_offset,
        mask_dim=mask_dim, dropout=cfg.dropout_rate, encoding=cfg.encoding,
        ita=cfg.ita, aux=cfg.aux, literal_loss=cfg.literal_loss,
        share_gate_params=cfg.share_gate_params, detach_side=cfg.detach_side,
        seed=cfg.seed,
    )
    return PairModel(model_cfg, vocab=vocab, provider=provider)


def total_loss(outputs: DocOutputs, cfg: TrainConfig) -> ad.Tensor:
    """L_pair + lambda1 * L_aux + lambda2 * L_KL, dropping disabled terms."""
    loss = outputs.loss_pair
    if cfg.aux and cfg.lambda1 != 0.0:
        loss = ad.add(loss, ad.scale(outputs.loss_aux, cfg.lambda1))
    if cfg.ita != "off" and cfg.lambda2 != 0.0:
        loss = ad.add(loss, ad.scale(outputs.loss_kl, cfg.lambda2))
    return loss


class AdamW:
    """Adaptive-moment update with decoupled weight decay."""

    def __init__(self, params: ad.ParameterStore, learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.01):
        self.params = params
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}

    def zero_grad(self):
        self.params.zero_grad()

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for p in self.params:
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise OptimizerError(f"non-finite gradient in parameter {p.name}")
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            if self.weight_decay:
                p.data *= 1.0 - self.lr * self.weight_decay
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def evaluate_model(model: PairModel, docs, threshold: float = 0.5,
                   macro: bool = False) -> MetricsReport:
    pairs = []
    for doc in docs:
        out = model.forward(doc, training=False)
        pairs.append((decode(out.scores, threshold), gold_predictions(doc)))
    return aggregate(pairs, macro=macro)


def mean_losses(model: PairModel, docs, cfg: TrainConfig) -> dict[str, float]:
    """Loss components averaged over documents, dropout disabled."""
    sums = {"loss_pair": 0.0, "loss_aux": 0.0, "loss_kl": 0.0, "loss_total": 0.0}
    for doc in docs:
        out = model.forward(doc, training=False)
        sums["loss_pair"] += out.loss_pair.item()
        sums["loss_aux"] += out.loss_aux.item()
        sums["loss_kl"] += out.loss_kl.item()
        sums["loss_total"] += total_loss(out, cfg).item()
    return {k: v / len(docs) for k, v in sums.items()}


@dataclass
class FitResult:
    model: PairModel
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float = 0.0


def fit(model: PairModel, train_docs: list[Document], cfg: TrainConfig,
        dev_docs: list[Document] | None = None) -> FitResult:
    """Seeded training loop with per-document graphs and batch accumulation.

    Gradients are summed over ``batch_size`` documents per optimizer step.
    Keeps the checkpoint with the best dev ECPE F1 (last epoch when no dev
    set is given) and logs loss components plus dev metrics per epoch.
    """
    cfg.validate()
    if not train_docs:
        raise ValueError("fit requires a nonempty training corpus")
    optimizer = AdamW(model.params, cfg.learning_rate,
                      weight_decay=cfg.weight_decay)
    shuffle_rng = np.random.default_rng(cfg.seed)
    model.reseed_dropout(np.random.default_rng(cfg.seed + 1).integers(2**63))

    result = FitResult(model=model)
    entry = {"epoch": 0, **mean_losses(model, train_docs, cfg)}
    if dev_docs:
        report = evaluate_model(model, dev_docs, cfg.threshold)
        entry["dev"] = report.to_dict()
        result.best_f1 = report.ecpe.f1
    result.log.append(entry)
    best_state = model.state_arrays() if dev_docs else None

    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(train_docs))
        sums = {"loss_pair": 0.0, "loss_aux": 0.0, "loss_kl": 0.0, "loss_total": 0.0}
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            for doc_idx in batch:
                doc = train_docs[int(doc_idx)]
                with ad.Graph():
                    out = model.forward(doc, training=True)
                    loss = total_loss(out, cfg)
                    if not np.isfinite(loss.item()):
                        raise TrainingDiverged(
                            f"non-finite loss at epoch {epoch}, step {start // cfg.batch_size}")
                    ad.backward(loss)
                sums["loss_pair"] += out.loss_pair.item()
                sums["loss_aux"] += out.loss_aux.item()
                sums["loss_kl"] += out.loss_kl.item()
                sums["loss_total"] += loss.item()
            optimizer.step()
        entry = {"epoch": epoch, **{k: v / len(order) for k, v in sums.items()}}
        if dev_docs:
            report = evaluate_model(model, dev_docs, cfg.threshold)
            entry["dev"] = report.to_dict()
            if report.ecpe.f1 > result.best_f1:
                result.best_f1 = report.ecpe.f1
                result.best_epoch = epoch
                best_state = model.state_arrays()
        result.log.append(entry)

    if dev_docs and best_state is not None and result.best_epoch > 0:
        model.load_state_arrays(best_state)
    elif dev_docs and result.best_epoch == 0 and cfg.epochs > 0:
        # No epoch improved on the initial dev score: keep the last epoch.
        result.best_epoch = cfg.epochs
        result.best_f1 = result.log[-1]["dev"]["ecpe"]["f1"] if "dev" in result.log[-1] else 0.0
    return result


def save_checkpoint(path, model: PairModel, train_cfg: TrainConfig | None = None):
    meta = {
        "version": CHECKPOINT_VERSION,
        "model_cfg": asdict(model.cfg),
        "train_cfg": asdict(train_cfg) if train_cfg else None,
        "provider_mode": model.provider.mode,
        "input_dim": model.input_dim,
    }
    if model.provider.mode == "trainable-lookup":
        vocab = model.provider.vocab
        meta["vocab"] = [t for t, _ in sorted(vocab.items(), key=lambda kv: kv[1])]
    arrays = {f"param/{name}": model.params[name].data for name in model.params.names()}
    np.savez(path, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path, provider: PrecomputedProvider | None = None
                    ) -> tuple[PairModel, dict | None]:
    """Rebuild a model from a checkpoint; name/shape sets must match exactly."""
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["__meta__"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        arrays = {k[len("param/"):]: blob[k] for k in blob.files if k.startswith("param/")}
    cfg = ModelConfig(**meta["model_cfg"])
    if meta["provider_mode"] == "precomputed":
        if provider is None:
            raise ValueError("checkpoint was trained on precomputed embeddings; "
                             "pass the embeddings file")
        model = PairModel(cfg, provider=provider)
    else:
        vocab = {tok: i for i, tok in enumerate(meta["vocab"])}
        model = PairModel(cfg, vocab=vocab)
    model.load_state_arrays(arrays)
    return model, meta["train_cfg"]
