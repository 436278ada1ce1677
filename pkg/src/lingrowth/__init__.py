"""Linear-growth variational image denoising and inpainting."""
