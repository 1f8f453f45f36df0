"""API routes modules"""
