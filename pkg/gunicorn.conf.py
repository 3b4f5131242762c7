"""
Gunicorn configuration for the fplnn API
https://docs.gunicorn.org/en/stable/settings.html
"""
import os

# Server socket
bind = f"0.0.0.0:{os.getenv('PORT', '8080')}"
backlog = 2048

# Worker processes
workers = int(os.getenv('WORKERS', '2'))
worker_class = 'sync'
timeout = 300  # enumeration with grid validation and fig runs can take a while
keepalive = 5
max_requests = 500
max_requests_jitter = 50

# Logging
accesslog = '-'
errorlog = '-'
loglevel = os.getenv('FPLNN_LOG_LEVEL', 'info').lower()
access_log_format = '%(h)s %(t)s "%(r)s" %(s)s %(b)s %(D)s'

# Process naming
proc_name = 'fplnn_api'

# Server mechanics
daemon = False
graceful_timeout = 30
