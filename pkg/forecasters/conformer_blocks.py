"""
Conformer building blocks without batch statistics.

All modules take and return tensors shaped (batch, time, channels).
"""

from torch import Tensor, nn


class FeedForward(nn.Module):
    """Pre-norm position-wise feed-forward layer."""

    def __init__(self, dim: int, expansion: int, dropout: float):
        super().__init__()
        self.norm = nn.LayerNorm(dim)
        self.intermediate = nn.Linear(dim, dim * expansion)
        self.output = nn.Linear(dim * expansion, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm(x)
        x = self.dropout(nn.functional.silu(self.intermediate(x)))
        return self.dropout(self.output(x))


class SelfAttention(nn.Module):
    """Pre-norm multi-head self-attention over the time axis."""

    def __init__(self, dim: int, heads: int, dropout: float):
        super().__init__()
        if dim % heads:
            raise ValueError(f"dim ({dim}) is not divisible by heads ({heads})")
        self.norm = nn.LayerNorm(dim)
        self.attention = nn.MultiheadAttention(dim, heads, dropout=dropout, batch_first=True)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm(x)
        x, _ = self.attention(x, x, x, need_weights=False)
        return self.dropout(x)


class ConvModule(nn.Module):
    """
    Pointwise conv + GLU, depthwise conv, normalization, SiLU, pointwise conv.

    The normalization after the depthwise convolution is a per-sample layer norm
    over channels, so outputs never depend on other samples of the batch.
    """

    def __init__(self, dim: int, kernel_size: int, dropout: float):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {kernel_size}")
        self.norm = nn.LayerNorm(dim)
        self.pointwise_in = nn.Conv1d(dim, 2 * dim, 1)
        self.depthwise = nn.Conv1d(dim, dim, kernel_size, padding=kernel_size // 2, groups=dim)
        self.depthwise_norm = nn.LayerNorm(dim)
        self.pointwise_out = nn.Conv1d(dim, dim, 1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm(x).transpose(1, 2)  # B, C, T
        x = nn.functional.glu(self.pointwise_in(x), dim=1)
        x = self.depthwise(x)
        x = self.depthwise_norm(x.transpose(1, 2)).transpose(1, 2)
        x = self.pointwise_out(nn.functional.silu(x))
        return self.dropout(x.transpose(1, 2))


class ConformerBlock(nn.Module):
    """Half-step FF, self-attention, convolution, half-step FF, final norm."""

    def __init__(self, dim: int, heads: int, kernel_size: int, ff_expansion: int, dropout: float):
        super().__init__()
        self.ff1 = FeedForward(dim, ff_expansion, dropout)
        self.attention = SelfAttention(dim, heads, dropout)
        self.conv = ConvModule(dim, kernel_size, dropout)
        self.ff2 = FeedForward(dim, ff_expansion, dropout)
        self.post_norm = nn.LayerNorm(dim)

    def forward(self, x: Tensor) -> Tensor:
        x = x + 0.5 * self.ff1(x)
        x = x + self.attention(x)
        x = x + self.conv(x)
        x = x + 0.5 * self.ff2(x)
        return self.post_norm(x)


class TimeReduction(nn.Module):
    """Downsample time by ``factor`` with a strided depthwise conv and a linear mix."""

    def __init__(self, dim: int, factor: int):
        super().__init__()
        self.factor = factor
        self.depthwise = nn.Conv1d(dim, dim, factor, stride=factor, groups=dim)
        self.mix = nn.Linear(dim, dim)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] % self.factor:
            raise ValueError(f"Sequence length {x.shape[1]} is not a multiple of {self.factor}")
        x = self.depthwise(x.transpose(1, 2)).transpose(1, 2)
        return self.mix(x)


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())

