"""Reference face-recognition backbone architecture.

A 50-layer residual network in the face-embedding style: 3x3 stem without
pooling, four stages of pre-activation basic blocks with 64/128/256/512
channels and [3, 4, 14, 3] depths, then BN -> flatten -> fc -> BN to a
512-dim embedding. Native input is 112x112 (the fc expects 512*7*7).

State-dict keys follow the customary naming for this family, so published
checkpoints load directly.
"""

from __future__ import annotations

import torch
import torch.nn as nn

STAGE_DEPTHS = (3, 4, 14, 3)
STAGE_PLANES = (64, 128, 256, 512)
EMBEDDING_DIM = 512
NATIVE_INPUT = 112
FC_SPATIAL = 7


class IBasicBlock(nn.Module):
    def __init__(self, inplanes: int, planes: int, stride: int = 1, downsample=None):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(inplanes, eps=1e-05)
        self.conv1 = nn.Conv2d(inplanes, planes, 3, stride=1, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes, eps=1e-05)
        self.prelu = nn.PReLU(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn3 = nn.BatchNorm2d(planes, eps=1e-05)
        self.downsample = downsample
        self.stride = stride

    def forward(self, x):
        identity = x
        out = self.bn1(x)
        out = self.conv1(out)
        out = self.bn2(out)
        out = self.prelu(out)
        out = self.conv2(out)
        out = self.bn3(out)
        if self.downsample is not None:
            identity = self.downsample(x)
        return out + identity


class FaceBackbone(nn.Module):
    def __init__(self, dropout: float = 0.0):
        super().__init__()
        self.inplanes = 64
        self.conv1 = nn.Conv2d(3, 64, 3, stride=1, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(64, eps=1e-05)
        self.prelu = nn.PReLU(64)
        self.layer1 = self._make_layer(STAGE_PLANES[0], STAGE_DEPTHS[0], stride=2)
        self.layer2 = self._make_layer(STAGE_PLANES[1], STAGE_DEPTHS[1], stride=2)
        self.layer3 = self._make_layer(STAGE_PLANES[2], STAGE_DEPTHS[2], stride=2)
        self.layer4 = self._make_layer(STAGE_PLANES[3], STAGE_DEPTHS[3], stride=2)
        self.bn2 = nn.BatchNorm2d(STAGE_PLANES[3], eps=1e-05)
        self.dropout = nn.Dropout(p=dropout, inplace=True)
        self.fc = nn.Linear(STAGE_PLANES[3] * FC_SPATIAL * FC_SPATIAL, EMBEDDING_DIM)
        self.features = nn.BatchNorm1d(EMBEDDING_DIM, eps=1e-05)

    def _make_layer(self, planes: int, blocks: int, stride: int) -> nn.Sequential:
        downsample = None
        if stride != 1 or self.inplanes != planes:
            downsample = nn.Sequential(
                nn.Conv2d(self.inplanes, planes, 1, stride=stride, bias=False),
                nn.BatchNorm2d(planes, eps=1e-05),
            )
        layers = [IBasicBlock(self.inplanes, planes, stride, downsample)]
        self.inplanes = planes
        for _ in range(1, blocks):
            layers.append(IBasicBlock(planes, planes))
        return nn.Sequential(*layers)

    def forward(self, x):
        x = self.conv1(x)
        x = self.bn1(x)
        x = self.prelu(x)
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        x = self.layer4(x)
        x = self.bn2(x)
        x = torch.flatten(x, 1)
        x = self.dropout(x)
        x = self.fc(x)
        return self.features(x)

    def forward_taps(self, x):
        """Stage outputs plus the final embedding (five taps)."""
        x = self.prelu(self.bn1(self.conv1(x)))
        s1 = self.layer1(x)
        s2 = self.layer2(s1)
        s3 = self.layer3(s2)
        s4 = self.layer4(s3)
        x = self.bn2(s4)
        x = torch.flatten(x, 1)
        x = self.dropout(x)
        embedding = self.features(self.fc(x))
        return s1, s2, s3, s4, embedding


def stage_final_conv_indices(model: FaceBackbone) -> list[int]:
    """1-based index of each stage's last convolution.

    Convolutions are counted in forward order within the four residual
    stages only (stem excluded), projection shortcuts included. For this
    depth configuration the indices are 7, 16, 45, 52.
    """
    indices = []
    count = 0
    for layer in (model.layer1, model.layer2, model.layer3, model.layer4):
        for module in layer.modules():
            if isinstance(module, nn.Conv2d):
                count += 1
        indices.append(count)
    return indices


def seeded_init(model: FaceBackbone, seed: int) -> FaceBackbone:
    """Deterministic random initialization with activation scales kept O(1).

    Residual-branch output norms are scaled down so magnitudes stay modest
    through all 24 blocks; the fc is scaled by 1/sqrt(fan_in). Keeps the
    float32 parity comparison well inside an absolute 1e-4 budget.
    """
    gen = torch.Generator().manual_seed(seed)
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
            module.weight.data.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=gen)
        elif isinstance(module, (nn.BatchNorm2d, nn.BatchNorm1d)):
            module.weight.data.fill_(1.0)
            module.bias.data.zero_()
            module.running_mean.zero_()
            module.running_var.fill_(1.0)
        elif isinstance(module, nn.PReLU):
            module.weight.data.fill_(0.25)
        elif isinstance(module, nn.Linear):
            module.weight.data.normal_(
                0.0, 1.0 / module.in_features**0.5, generator=gen
            )
            module.bias.data.zero_()
    for block in model.modules():
        if isinstance(block, IBasicBlock):
            block.bn3.weight.data.fill_(0.25)
    return model


def load_weights(model: FaceBackbone, weights_path) -> FaceBackbone:
    from .export import ArchitectureMismatch

    try:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ArchitectureMismatch(f"{weights_path}: cannot read weights ({exc})") from exc
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    try:
        model.load_state_dict(state, strict=True)
    except Exception as exc:
        raise ArchitectureMismatch(f"{weights_path}: {exc}") from exc
    return model
