"""
Dense double-precision kernels with hand-written backward passes.
"""
from .attention import AttentionCache, AttentionParams, mha_backward, mha_forward
from .flops import FlopCounter
from .layers import MlpParams, mlp_backward, mlp_forward
from .losses import focal_loss, focal_loss_grad, l1_loss, l1_loss_grad

__all__ = [
    'AttentionCache', 'AttentionParams', 'FlopCounter', 'MlpParams', 'focal_loss',
    'focal_loss_grad', 'l1_loss', 'l1_loss_grad', 'mha_backward', 'mha_forward',
    'mlp_backward', 'mlp_forward',
]
