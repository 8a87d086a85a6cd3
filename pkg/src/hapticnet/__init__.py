"""Multimodal haptic-adjective classification pipeline.

Subpackages/modules:
    engine      -- tensors-as-ndarrays, layers, losses, SGD momentum
    haptic      -- raw trial -> 32x150 instance preprocessing
    visual      -- plate crop geometry and pooled visual features
    models      -- model graphs (grouped CNN, LSTM, fusion classifier)
    training    -- two-phase training schedule
    features    -- activation extraction, instance combination, fusion
    evaluation  -- splits, ROC-AUC, report aggregation
    io          -- file formats, manifests, checkpoints
    synth       -- synthetic dataset generator
    cli         -- command-line interface
"""

__version__ = "0.1.0"
