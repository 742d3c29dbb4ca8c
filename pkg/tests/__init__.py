# Test package for Multi-Agent Research System