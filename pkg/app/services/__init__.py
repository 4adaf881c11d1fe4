"""Business logic services package"""
