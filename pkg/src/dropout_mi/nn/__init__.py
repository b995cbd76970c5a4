from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheck, check_gradients
from .network import ForwardResult, LayerSpec, Network, fc_network
from .train import (
    Batch,
    LossResult,
    ProbeContext,
    TrainConfig,
    TrainingDiverged,
    cross_entropy,
    evaluate,
    loss_and_gradients,
    predict_proba,
    probe_activations,
    train,
)
