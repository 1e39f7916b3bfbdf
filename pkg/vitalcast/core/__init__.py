# Core utilities package initialization
