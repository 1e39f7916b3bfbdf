# Data models package initialization
