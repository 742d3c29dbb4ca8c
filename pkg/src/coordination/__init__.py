# Seed sweeps and run manifests
