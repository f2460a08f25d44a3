"""toolrouter: synthesize history-aware routing supervision from candidate
graphs and evaluate routers over tool/agent pools."""

__version__ = "0.1.0"
