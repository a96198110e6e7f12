"""
Training loop: scene-list batches, Adam with step decay, per-epoch loss log
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..data.batching import epoch_batches
from ..model.mart import MART
from ..utils.errors import DataError
from ..utils.log import log_fields
from .checkpoint import save_checkpoint
from .optimizer import Adam, step_decay

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    lr: float
    steps: int
    scenes: int

    def to_dict(self):
        return {"epoch": self.epoch, "loss": self.loss, "lr": self.lr,
                "steps": self.steps, "scenes": self.scenes}


class Trainer:
    """
    Fit a MART model on labeled scenes

    Each batch is a list of scenes. Per-scene forward/backward passes may run
    on a thread pool (cfg.workers) against the current parameter values; the
    gradients are then summed in scene order and averaged, so results do not
    depend on the worker count or on completion order.
    """

    def __init__(self, cfg, scenes, model=None, optimizer=None, progress=False):
        self.cfg = cfg.validate()
        self.scenes = list(scenes)
        _check_training_scenes(self.scenes, cfg)
        self.model = model if model is not None else MART(cfg)
        self.optimizer = optimizer if optimizer is not None else Adam(self.model.params, lr=cfg.lr)
        self.progress = progress
        self.epoch = 0
        self.step = 0
        self.history = []
        self.step_losses = []

    @classmethod
    def from_checkpoint(cls, checkpoint, scenes, cfg=None, progress=False):
        """Resume from a Checkpoint: parameters, Adam moments and training position"""
        cfg = cfg if cfg is not None else checkpoint.config
        model = checkpoint.build_model(cfg)
        trainer = cls(cfg, scenes, model=model, progress=progress)
        if checkpoint.optimizer_state is not None:
            trainer.optimizer.load_state_dict(checkpoint.optimizer_state)
        trainer.epoch = checkpoint.epoch
        trainer.step = checkpoint.step
        return trainer

    # gradients --------------------------------------------------------------
    def batch_gradients(self, batch, executor=None):
        """
        Mean loss and mean gradients over a batch

        Returns:
            (mean loss, dict name -> mean adjoint, list of per-scene losses)
        """
        if executor is not None and len(batch) > 1:
            results = list(executor.map(self.model.loss_and_grads, batch))
        else:
            results = [self.model.loss_and_grads(scene) for scene in batch]

        total = None
        for _, grads in results:
            if total is None:
                total = {name: grad.copy() for name, grad in grads.items()}
            else:
                for name, grad in grads.items():
                    total[name] += grad
        scale = 1.0 / len(results)
        mean_grads = {name: grad * np.asarray(scale, dtype=grad.dtype) for name, grad in total.items()}
        losses = [loss for loss, _ in results]
        return float(np.mean(losses)), mean_grads, losses

    # loop -------------------------------------------------------------------
    def _budget_left(self):
        return self.cfg.max_steps == 0 or self.step < self.cfg.max_steps

    def train_epoch(self, epoch, executor=None):
        lr = step_decay(self.cfg.lr, epoch, self.cfg.lr_decay_factor, self.cfg.lr_decay_every)
        scene_losses, steps = [], 0
        for batch in epoch_batches(self.scenes, self.cfg.batch_size, self.cfg.seed, epoch):
            if not self._budget_left():
                break
            loss, grads, losses = self.batch_gradients(batch, executor)
            self.optimizer.step(grads, lr=lr)
            self.step += 1
            steps += 1
            self.step_losses.append(loss)
            scene_losses.extend(losses)
        return EpochRecord(epoch=epoch, loss=float(np.mean(scene_losses)) if scene_losses else float("nan"),
                           lr=lr, steps=steps, scenes=len(scene_losses))

    def train(self, checkpoint_path=None, checkpoint_every=0):
        """
        Run the remaining epochs (or until cfg.max_steps optimizer steps)

        Args:
            checkpoint_path: where to write checkpoints (final one always written
                when given)
            checkpoint_every: also write after every n-th epoch (0 = only at the end)

        Returns:
            List of EpochRecord for the epochs run by this call
        """
        epochs = range(self.epoch, self.cfg.epochs)
        if self.progress:
            try:
                from tqdm import tqdm
                epochs = tqdm(epochs, desc="Training")
            except ImportError:
                pass

        log_fields(logger, "training started", scenes=len(self.scenes), parameters=self.model.num_parameters(),
                   epochs=self.cfg.epochs, start_epoch=self.epoch, max_steps=self.cfg.max_steps,
                   workers=self.cfg.workers)
        records = []
        executor = ThreadPoolExecutor(max_workers=self.cfg.workers) if self.cfg.workers > 1 else None
        try:
            for epoch in epochs:
                if not self._budget_left():
                    break
                record = self.train_epoch(epoch, executor)
                if record.steps == 0:
                    break
                records.append(record)
                self.history.append(record)
                self.epoch = epoch + 1
                log_fields(logger, "epoch", **record.to_dict(), step=self.step)
                if checkpoint_path and checkpoint_every and self.epoch % checkpoint_every == 0:
                    self.save(checkpoint_path)
        finally:
            if executor is not None:
                executor.shutdown()

        if checkpoint_path:
            self.save(checkpoint_path)
        log_fields(logger, "training finished", epochs_run=len(records), step=self.step,
                   final_loss=records[-1].loss if records else None)
        return records

    def save(self, path):
        return save_checkpoint(path, self.cfg, self.model.params, optimizer=self.optimizer,
                               epoch=self.epoch, step=self.step)


def _check_training_scenes(scenes, cfg):
    if not scenes:
        raise DataError("No training scenes")
    for scene in scenes:
        if not scene.labeled:
            raise DataError(f"scene {scene.scene_id} has no future trajectories")
        if scene.t_p != cfg.t_p or scene.t_f != cfg.t_f:
            raise DataError(f"scene {scene.scene_id} has T_p/T_f={scene.t_p}/{scene.t_f}, "
                            f"config expects {cfg.t_p}/{cfg.t_f}")


def train(cfg, scenes, checkpoint_path=None, progress=False):
    """Train from scratch; returns (Trainer, epoch records)"""
    trainer = Trainer(cfg, scenes, progress=progress)
    return trainer, trainer.train(checkpoint_path=checkpoint_path)
