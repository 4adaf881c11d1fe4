"""API endpoints package"""
