"""
Forecast error metrics, throughput measurement and evaluation reports.
"""
