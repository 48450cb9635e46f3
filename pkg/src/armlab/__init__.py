"""armlab: diffusion policies with action chunking on a planar bimanual simulator."""

__version__ = "0.1.0"
